"""Synthetic anomaly injection and seasonal test-series generation.

Randomness comes from :class:`Pcg32`, a fixed, documented generator, so every
port reproduces the same altered indices and offsets for a given seed:

* state transition: ``state = state * 6364136223846793005 + inc  (mod 2**64)``
* ``inc = (seed_stream << 1) | 1`` with ``seed_stream = 0xda3e39cb94b95bdb``
* output: XSH-RR permutation of the old state (xorshift high, random rotate)
* seeding: ``state = 0; step; state += seed; step``  (PCG reference seeding)
* doubles: ``((a >> 5) * 2**26 + (b >> 6)) / 2**53`` from two outputs a, b
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RateTooHigh
from .series import MINUTE, TimeSeries

_MASK64 = (1 << 64) - 1
_MULT = 6364136223846793005
_STREAM = 0xDA3E39CB94B95BDB


class Pcg32:
    """PCG-XSH-RR 64/32."""

    def __init__(self, seed: int, stream: int = _STREAM):
        self.inc = ((stream << 1) | 1) & _MASK64
        self.state = 0
        self.next_u32()
        self.state = (self.state + (seed & _MASK64)) & _MASK64
        self.next_u32()

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * _MULT + self.inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def bounded(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection (no modulo bias)."""
        if not 0 < bound <= 1 << 32:
            raise ValueError("bound must be in (0, 2**32]")
        threshold = ((1 << 32) - bound) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def uniform(self) -> float:
        """Double in [0, 1) with 53 random bits."""
        a = self.next_u32() >> 5
        b = self.next_u32() >> 6
        return (a * 67108864.0 + b) / 9007199254740992.0

    def sign(self) -> int:
        return 1 if self.next_u32() >> 31 else -1

    def normal(self) -> float:
        """Standard normal via the Box-Muller cosine branch (one per call)."""
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)])

    def sample_indices(self, n: int, m: int) -> list[int]:
        """``m`` distinct indices from range(n), partial Fisher-Yates order."""
        pool = list(range(n))
        for i in range(m):
            j = i + self.bounded(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:m]


@dataclass(frozen=True)
class InjectionConfig:
    rate: float = 0.01
    offset_min: float = 1.0
    offset_max: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"rate must lie in [0, 1], got {self.rate}")
        if not 0.0 < self.offset_min < self.offset_max:
            raise ConfigError("need 0 < offset_min < offset_max")

    def count(self, n: int) -> int:
        # round half up, so 1% of 100 readings gives exactly one anomaly
        return int(math.floor(self.rate * n + 0.5))

    def echo(self) -> str:
        return f"rate={self.rate!r} offset_min={self.offset_min!r} offset_max={self.offset_max!r} seed={self.seed}"


@dataclass(frozen=True, eq=False)
class LabeledSeries:
    series: TimeSeries
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=bool)
        if labels.size != len(self.series):
            raise ValueError("labels must align with the series")
        object.__setattr__(self, "labels", labels)


def injection_plan(n: int, cfg: InjectionConfig) -> list[tuple[int, float]]:
    """(index, signed offset) pairs in draw order."""
    m = cfg.count(n)
    if m > n:
        raise RateTooHigh(f"{m} injections requested for {n} points")
    rng = Pcg32(cfg.seed)
    indices = rng.sample_indices(n, m)
    width = cfg.offset_max - cfg.offset_min
    plan = []
    for idx in indices:
        s = rng.sign()
        u = cfg.offset_min + width * rng.uniform()
        plan.append((idx, s * u))
    return plan


def inject(series: TimeSeries, cfg: InjectionConfig = InjectionConfig()) -> LabeledSeries:
    """Add a random signed offset to round(rate * N) randomly chosen readings."""
    n = len(series)
    if n == 0:
        raise ConfigError("cannot inject into an empty series")
    values = series.values.copy()
    labels = np.zeros(n, dtype=bool)
    for idx, delta in injection_plan(n, cfg):
        values[idx] += delta
        labels[idx] = True
    return LabeledSeries(series.with_values(values), labels)


@dataclass(frozen=True)
class SeasonalSpec:
    """Parameters of a sinusoid + linear trend + Gaussian noise series."""

    n: int = 3 * 1440
    period: int = 1440
    level: float = 10.0
    amplitude: float = 2.0
    trend: float = 0.5  # total rise over the series
    noise: float = 0.25
    seed: int = 0
    start: str = "2016-10-18T00:00:00"


def seasonal_series(spec: SeasonalSpec = SeasonalSpec(), sensor_id: str = "NH4", phase: float = 0.0) -> TimeSeries:
    t = np.arange(spec.n)
    rng = Pcg32(spec.seed, stream=_STREAM ^ 0x5EA50)
    values = (
        spec.level
        + spec.amplitude * np.sin(2.0 * math.pi * t / spec.period + phase)
        + spec.trend * t / max(spec.n - 1, 1)
        + spec.noise * rng.normals(spec.n)
    )
    return TimeSeries.regular(values, start=spec.start, step=MINUTE, sensor_id=sensor_id)


def companion_series(spec: SeasonalSpec, sensor_id: str = "O2") -> TimeSeries:
    """Anti-correlated partner (high ammonia goes with low oxygen).

    Shares the seasonal shape with opposite sign and draws independent noise.
    """
    other = SeasonalSpec(
        n=spec.n,
        period=spec.period,
        level=spec.level,
        amplitude=spec.amplitude,
        trend=-spec.trend,
        noise=spec.noise,
        seed=spec.seed + 0x9E3779B9,
        start=spec.start,
    )
    return seasonal_series(other, sensor_id=sensor_id, phase=math.pi)
