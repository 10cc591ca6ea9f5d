"""Univariate detectors: baseline, low-high pass filter, Gaussian predictor, S-ESD."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, SeriesTooShort, TooFewSamples, ZeroVariance
from .series import as_values
from .stats import DEFAULT_PERIOD, GaussianModel, decompose
from .tdist import t_ppf


@dataclass(frozen=True, eq=False)
class AnomalyReport:
    detector: str
    flags: np.ndarray
    scores: np.ndarray
    config_echo: str = ""

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=bool)
        scores = np.asarray(self.scores, dtype=np.float64)
        if flags.shape != scores.shape or flags.ndim != 1:
            raise ValueError("flags and scores must be aligned 1-D arrays")
        object.__setattr__(self, "flags", flags)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return self.flags.size

    @property
    def flagged(self) -> np.ndarray:
        return np.flatnonzero(self.flags)

    def same_as(self, other: "AnomalyReport") -> bool:
        return (
            self.detector == other.detector
            and self.config_echo == other.config_echo
            and np.array_equal(self.flags, other.flags)
            and np.array_equal(self.scores, other.scores, equal_nan=True)
        )


# ------------------------------------------------------------------ baseline


def baseline_detect(series) -> AnomalyReport:
    """Flag x_i when the integer part of |x_i - x_{i-1}| exceeds 1."""
    x = as_values(series)
    if x.size < 2:
        raise SeriesTooShort("baseline needs at least 2 points")
    gaps = np.zeros(x.size)
    gaps[1:] = np.abs(np.diff(x))
    flags = np.floor(gaps) > 1
    return AnomalyReport("baseline", flags, gaps, "")


# ------------------------------------------------------ low-high pass filter


@dataclass(frozen=True)
class FilterConfig:
    window: int = 5
    alpha: float = 1.0
    mode: str = "offline"

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 2:
            raise ConfigError(f"window must be an integer >= 2, got {self.window}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.mode not in ("online", "offline"):
            raise ConfigError(f"mode must be online or offline, got {self.mode!r}")

    def echo(self) -> str:
        return f"window={self.window} alpha={self.alpha!r} mode={self.mode}"


OFFLINE_SPORADIC = FilterConfig(window=5, alpha=1.0, mode="offline")
OFFLINE_TREND = FilterConfig(window=600, alpha=1.0, mode="offline")
ONLINE_SPORADIC = FilterConfig(window=20, alpha=0.2, mode="online")
ONLINE_TREND = FilterConfig(window=1440, alpha=0.5, mode="online")


def band_rule(x, avg, std, alpha):
    scaled = alpha * x
    return (scaled > avg + std) | (scaled < avg - std)


def lowhigh_offline(series, cfg: FilterConfig = OFFLINE_SPORADIC) -> AnomalyReport:
    """Running average over the last W points against the whole-series std.

    The first W-1 points are judged against the partially filled window.
    """
    x = np.ascontiguousarray(as_values(series))
    if x.size < cfg.window:
        raise SeriesTooShort(f"series of {x.size} points is shorter than window {cfg.window}")
    constant = np.ptp(x) == 0.0
    series_std = 0.0 if constant else float(np.std(x))
    avg = kernels.sliding_mean(x, cfg.window)
    scores = cfg.alpha * x - avg
    if constant and cfg.alpha == 1.0:
        # constant input: every reading equals its running average
        flags = np.zeros(x.size, dtype=bool)
    else:
        flags = band_rule(x, avg, series_std, cfg.alpha)
    return AnomalyReport("lowhigh-offline", flags, scores, cfg.echo())


class LowHighOnline:
    """Streaming low-high pass filter with O(1) work per reading.

    Keeps a ring buffer of the last W readings plus a running mean and sum of
    squared deviations. The band half-width is the sample std of the current
    window (0 while it holds a single reading).
    """

    def __init__(self, cfg: FilterConfig = ONLINE_SPORADIC):
        self.cfg = cfg
        self._ring = np.zeros(cfg.window)
        self._count = 0
        self._seen = 0
        self._mean = 0.0
        self._m2 = 0.0
        self.flags: list[bool] = []
        self.scores: list[float] = []

    @property
    def mean(self) -> float:
        return self._mean

    @property
    def std(self) -> float:
        if self._count < 2:
            return 0.0
        return math.sqrt(self._m2 / (self._count - 1))

    def update(self, x: float) -> bool:
        x = float(x)
        w = self.cfg.window
        slot = self._seen % w
        if self._count < w:
            self._count += 1
            delta = x - self._mean
            self._mean += delta / self._count
            self._m2 += delta * (x - self._mean)
        else:
            old = float(self._ring[slot])
            new_mean = self._mean + (x - old) / w
            self._m2 += (x - old) * (x - new_mean + old - self._mean)
            self._mean = new_mean
        if self._m2 < 0.0:
            self._m2 = 0.0
        self._ring[slot] = x
        self._seen += 1
        std = self.std
        alpha = self.cfg.alpha
        flag = bool(alpha * x > self._mean + std or alpha * x < self._mean - std)
        self.flags.append(flag)
        self.scores.append(alpha * x - self._mean)
        return flag

    def report(self) -> AnomalyReport:
        return AnomalyReport("lowhigh-online", np.array(self.flags, dtype=bool), np.array(self.scores), self.cfg.echo())


def lowhigh_online(values, cfg: FilterConfig = ONLINE_SPORADIC) -> AnomalyReport:
    """Drain a whole sequence through the streaming rule in one kernel call."""
    x = np.ascontiguousarray(as_values(values))
    means, stds = kernels.window_stats(x, cfg.window)
    flags = band_rule(x, means, stds, cfg.alpha)
    return AnomalyReport("lowhigh-online", flags, cfg.alpha * x - means, cfg.echo())


# ------------------------------------------------------- Gaussian predictor

GAUSSIAN_EPS = 0.08


def _check_model(model: GaussianModel) -> None:
    if model.zero_variance:
        raise ZeroVariance("Gaussian model has zero variance")


def gaussian_score(model: GaussianModel, z):
    """Two-tailed tail probability 2(1 - Phi(|z - mu| / sigma)).

    Scalars in, scalar out; arrays in, array out.
    """
    _check_model(model)
    arr = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = kernels.normal_tail(np.ascontiguousarray(arr), model.mean, model.std)
    return float(out[0]) if np.ndim(z) == 0 else out


def gaussian_detect(model: GaussianModel, series, eps: float = GAUSSIAN_EPS, window: int | None = None) -> AnomalyReport:
    """Flag readings (or tumbling windows) whose probability is below ``eps``.

    In window mode the window probability is the product of its members'
    scores; every member of a flagged window is flagged. The trailing window
    may be shorter than ``window``.
    """
    if not 0.0 < eps < 1.0:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    x = as_values(series)
    scores = gaussian_score(model, x)
    echo = f"eps={eps!r} mean={model.mean!r} variance={model.variance!r}"
    if window is None:
        return AnomalyReport("gaussian", scores < eps, scores, echo)
    if window < 1:
        raise ConfigError(f"window must be positive, got {window}")
    with np.errstate(divide="ignore"):
        logs = np.log(scores)
    starts = np.arange(0, x.size, window)
    window_log = np.add.reduceat(logs, starts) if x.size else np.array([])
    hit = window_log < math.log(eps)
    flags = np.repeat(hit, np.diff(np.append(starts, x.size)))
    return AnomalyReport("gaussian-window", flags, scores, f"{echo} window={window}")


# ------------------------------------------------------------ generalized ESD


def esd_critical(n: int, j: int, significance: float) -> float:
    """Critical value for the j-th (1-based) removal from n points."""
    p = 1.0 - significance / (2.0 * (n - j + 1))
    t = t_ppf(p, n - j - 1)
    return (n - j) * t / math.sqrt((n - j - 1 + t * t) * (n - j + 1))


def esd_test(values, k: int, significance: float = 0.05) -> np.ndarray:
    """Generalized ESD: sorted indices of up to ``k`` outliers (two-sided)."""
    if int(k) != k or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k}")
    if not 0.0 < significance < 1.0:
        raise ConfigError(f"significance must lie in (0, 1), got {significance}")
    x = np.ascontiguousarray(as_values(values))
    n = x.size
    if n < k + 2:
        raise TooFewSamples(f"need at least k + 2 = {k + 2} values, got {n}")
    if np.std(x) == 0.0:
        raise ZeroVariance("ESD undefined for constant input")
    removed, stats = kernels.esd_extremes(x, int(k))
    last = 0
    for j in range(1, removed.size + 1):
        if stats[j - 1] > esd_critical(n, j, significance):
            last = j
    return np.sort(removed[:last])


@dataclass(frozen=True)
class EsdConfig:
    """``max_outliers=None`` resolves to 2% of the series length."""

    max_outliers: int | None = None
    significance: float = 0.05
    period: int = DEFAULT_PERIOD

    AUTO_FRACTION = 0.02

    def __post_init__(self):
        if self.max_outliers is not None and (int(self.max_outliers) != self.max_outliers or self.max_outliers < 1):
            raise ConfigError(f"max_outliers must be a positive integer, got {self.max_outliers}")
        if not 0.0 < self.significance < 1.0:
            raise ConfigError(f"significance must lie in (0, 1), got {self.significance}")
        if self.period < 1:
            raise ConfigError(f"period must be positive, got {self.period}")

    def resolve_k(self, n: int) -> int:
        if self.max_outliers is None:
            return max(1, int(self.AUTO_FRACTION * n))
        if self.max_outliers >= n / 2:
            raise ConfigError(f"max_outliers {self.max_outliers} must be below half the series length {n}")
        return int(self.max_outliers)

    def echo(self, n: int | None = None) -> str:
        k = self.max_outliers if n is None else self.resolve_k(n)
        return f"max_outliers={k} significance={self.significance!r} period={self.period}"


def sesd_residual(series, period: int) -> np.ndarray:
    """Series minus its seasonal component minus the median of the trend."""
    x = as_values(series)
    decomp = decompose(x, period)
    trend = decomp.trend[decomp.defined]
    return x - decomp.seasonal - float(np.median(trend))


def sesd_detect(series, cfg: EsdConfig = EsdConfig()) -> AnomalyReport:
    x = as_values(series)
    if x.size < 2 * cfg.period:
        raise SeriesTooShort(f"S-ESD needs at least {2 * cfg.period} points, got {x.size}")
    k = cfg.resolve_k(x.size)
    residual = sesd_residual(x, cfg.period)
    idx = esd_test(residual, k, cfg.significance)
    flags = np.zeros(x.size, dtype=bool)
    flags[idx] = True
    spread = np.std(residual, ddof=1)
    scores = np.abs(residual - residual.mean()) / spread
    return AnomalyReport("sesd", flags, scores, cfg.echo(x.size))
