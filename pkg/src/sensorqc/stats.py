"""Seasonal-trend decomposition, Gaussian MLE and correlation coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConstantInput, LengthMismatch, SeriesTooShort, TooFewSamples, Undefined
from .series import as_values

DEFAULT_PERIOD = 1440  # one day of per-minute readings


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Additive components; ``trend`` and ``residual`` are NaN where undefined."""

    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray
    period: int

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.trend)


def centered_moving_average(x: np.ndarray, period: int) -> np.ndarray:
    """Centered MA of width ``period``; even widths use the 2xP half-weight form."""
    n = x.size
    half = period // 2
    if period % 2:
        weights = np.full(period, 1.0 / period)
    else:
        weights = np.full(period + 1, 1.0 / period)
        weights[0] = weights[-1] = 0.5 / period
    trend = np.full(n, np.nan)
    if n > 2 * half:
        trend[half : n - half] = np.convolve(x, weights, mode="valid")
    return trend


def decompose(series, period: int = DEFAULT_PERIOD) -> Decomposition:
    """Classical additive decomposition by moving averages."""
    x = as_values(series)
    if period < 1:
        raise ValueError("period must be positive")
    if x.size < 2 * period:
        raise SeriesTooShort(f"need at least {2 * period} points for period {period}, got {x.size}")
    trend = centered_moving_average(x, period)
    detrended = x - trend
    phase = np.arange(x.size) % period
    ok = ~np.isnan(detrended)
    sums = np.bincount(phase[ok], weights=detrended[ok], minlength=period)
    counts = np.bincount(phase[ok], minlength=period)
    profile = sums / counts
    profile -= profile.mean()
    seasonal = profile[phase]
    residual = x - trend - seasonal
    return Decomposition(trend=trend, seasonal=seasonal, residual=residual, period=period)


def residual_normality(decomp: Decomposition) -> tuple[float, float]:
    """Sample skewness and excess kurtosis of the defined residuals.

    Both are near zero for a normally distributed residual.
    """
    r = decomp.residual[~np.isnan(decomp.residual)]
    centered = r - r.mean()
    m2 = np.mean(centered**2)
    if m2 == 0:
        return 0.0, 0.0
    skew = np.mean(centered**3) / m2**1.5
    kurt = np.mean(centered**4) / m2**2 - 3.0
    return float(skew), float(kurt)


@dataclass(frozen=True)
class GaussianModel:
    mean: float
    variance: float
    n: int

    @property
    def zero_variance(self) -> bool:
        return self.variance == 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def fit_gaussian(values) -> GaussianModel:
    """Maximum-likelihood mean and (divisor n) variance."""
    x = as_values(values)
    if x.size < 2:
        raise TooFewSamples(f"need at least 2 values, got {x.size}")
    mu = float(np.mean(x))
    var = float(np.mean((x - mu) ** 2))
    return GaussianModel(mean=mu, variance=var, n=int(x.size))


def _paired(x, y):
    x = as_values(x)
    y = as_values(y)
    if x.size != y.size:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise TooFewSamples("need at least 2 pairs")
    return x, y


def pearson(x, y) -> float:
    x, y = _paired(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise ConstantInput("correlation undefined for a constant sequence")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    boundaries = np.flatnonzero(np.diff(sorted_x)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [x.size]])
    ranks_sorted = np.repeat((starts + ends + 1) / 2.0, ends - starts)
    ranks = np.empty(x.size)
    ranks[order] = ranks_sorted
    return ranks


def spearman(x, y) -> float:
    x, y = _paired(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def kendall(x, y) -> float:
    """Kendall's tau-b."""
    x, y = _paired(x, y)
    s, tied_x, tied_y = kernels.kendall_pairs(np.ascontiguousarray(x), np.ascontiguousarray(y))
    n0 = x.size * (x.size - 1) // 2
    denom = (n0 - tied_x) * (n0 - tied_y)
    if denom == 0:
        raise Undefined("tau-b undefined: one input is constant")
    return max(-1.0, min(1.0, s / math.sqrt(denom)))


def decomposition_rows(series, decomp: Decomposition):
    """Rows for the ``index,value,trend,seasonal,residual`` export."""
    x = as_values(series)
    for i in range(x.size):
        yield i, x[i], decomp.trend[i], decomp.seasonal[i], decomp.residual[i]
