"""Time each hot kernel in its numba and numpy flavours.

Run with ``python benchmarks/bench_kernels.py [--repeat N] [--scale S]``.
The first numba call of each kernel is a warm-up (JIT compile or cache load)
and is excluded from the timings.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from sensorqc import kernels
from sensorqc._backend import HAVE_NUMBA


def workloads(scale: float, rng: np.random.Generator) -> dict:
    n = int(100_000 * scale)
    x = rng.normal(size=n)
    pts = rng.normal(size=(int(20_000 * scale), 3))
    cents = rng.normal(size=(12, 3))
    kx = rng.integers(0, 50, int(3_000 * scale)).astype(float)
    ky = kx + rng.normal(size=kx.size).round(1)
    esd = rng.normal(size=int(5_000 * scale))
    return {
        "sliding_mean": (x, 600),
        "window_stats": (x, 1440),
        "kendall_pairs": (kx, ky),
        "esd_extremes": (esd, 100),
        "assign": (pts, cents),
        "normal_tail": (x, 0.0, 1.0),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, call_args in workloads(args.scale, rng).items():
        nb, npf = kernels.PAIRS[name]
        t_np = min(timeit.repeat(lambda: npf(*call_args), number=1, repeat=args.repeat))
        if HAVE_NUMBA:
            nb(*call_args)
            t_nb = min(timeit.repeat(lambda: nb(*call_args), number=1, repeat=args.repeat))
            print(f"{name:<14} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{name:<14} {t_np * 1e3:>10.2f} {'n/a':>10} {'':>8}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
