"""Bare-bones SVG rendering: one polyline plus circle markers."""

from __future__ import annotations

import numpy as np


def render(values, flags=None, width: int = 900, height: int = 300, margin: int = 20) -> str:
    y = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(y)
    lo = float(np.min(y[finite])) if finite.any() else 0.0
    hi = float(np.max(y[finite])) if finite.any() else 1.0
    span = hi - lo or 1.0
    n = max(y.size - 1, 1)

    def px(i, v):
        return (margin + (width - 2 * margin) * i / n, height - margin - (height - 2 * margin) * (v - lo) / span)

    pts = " ".join(f"{x:.2f},{yy:.2f}" for x, yy in (px(i, v) for i, v in enumerate(y) if np.isfinite(v)))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>',
    ]
    if flags is not None:
        for i in np.flatnonzero(np.asarray(flags, dtype=bool)):
            if np.isfinite(y[i]):
                cx, cy = px(i, y[i])
                parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="orange"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def histogram(values, digits: int) -> list[tuple[str, int]]:
    """Counts of values rounded to ``digits`` decimals, ascending."""
    y = np.asarray(values, dtype=np.float64)
    y = y[np.isfinite(y)]
    rounded = np.round(y, digits)
    keys, counts = np.unique(rounded, return_counts=True)
    return [(f"{k:.{digits}f}", int(c)) for k, c in zip(keys, counts)]
