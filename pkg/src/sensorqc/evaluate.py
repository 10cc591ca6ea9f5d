"""Confusion counts, P/R/F1/accuracy, anomaly-frequency profiling, fault flagging
and ensemble voting."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from .detect import AnomalyReport
from .errors import ConfigError, EmptyEnsemble, EmptyRegion, LengthMismatch, NonpositiveWeights


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class EvalMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)!r}\n" for f in fields(self))

    def percent(self, digits: int = 2) -> tuple:
        return tuple(round(100.0 * v, digits) for v in astuple(self))


def _flags_of(report) -> np.ndarray:
    return report.flags if isinstance(report, AnomalyReport) else np.asarray(report, dtype=bool)


def confusion(report, labels) -> ConfusionCounts:
    flags = _flags_of(report)
    labels = np.asarray(labels, dtype=bool)
    if flags.shape != labels.shape:
        raise LengthMismatch(f"{flags.size} flags vs {labels.size} labels")
    tp = int(np.count_nonzero(flags & labels))
    fp = int(np.count_nonzero(flags & ~labels))
    fn = int(np.count_nonzero(~flags & labels))
    tn = int(flags.size - tp - fp - fn)
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(num: float, den: float) -> float:
    # 0/0 is defined as 0 so degenerate detectors still get a row
    return num / den if den else 0.0


def metrics(c: ConfusionCounts) -> EvalMetrics:
    p = _ratio(c.tp, c.tp + c.fp)
    r = _ratio(c.tp, c.tp + c.fn)
    f1 = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)
    acc = _ratio(c.tp + c.tn, c.total)
    return EvalMetrics(p, r, f1, acc)


METRIC_COLUMNS = ("tp", "fp", "fn", "tn", "precision", "recall", "f1", "accuracy")


def metrics_row(c: ConfusionCounts, m: EvalMetrics) -> list:
    return [c.tp, c.fp, c.fn, c.tn, m.precision, m.recall, m.f1, m.accuracy]


# ------------------------------------------------------- frequency profiling


@dataclass(frozen=True, eq=False)
class WindowFrequency:
    in_rate: float
    out_rate: float
    bin_starts: np.ndarray
    bin_counts: np.ndarray
    bin_inside: np.ndarray


def window_frequency(report, timestamps, bin, window) -> WindowFrequency:
    """Flag density inside vs outside a labelled time window, plus per-bin counts.

    Bins are aligned to the first timestamp; a bin is marked inside when its
    start lies in [window_start, window_end].
    """
    flags = _flags_of(report)
    ts = np.asarray(timestamps, dtype="datetime64[s]")
    if flags.size != ts.size:
        raise LengthMismatch(f"{flags.size} flags vs {ts.size} timestamps")
    bin = np.timedelta64(bin, "s") if not isinstance(bin, np.timedelta64) else bin.astype("timedelta64[s]")
    if bin <= np.timedelta64(0, "s"):
        raise ConfigError("bin width must be positive")
    start, end = (np.datetime64(w, "s") for w in window)
    inside = (ts >= start) & (ts <= end)
    if not inside.any() or inside.all():
        raise EmptyRegion("window must leave points both inside and outside")
    in_rate = float(flags[inside].mean())
    out_rate = float(flags[~inside].mean())
    idx = ((ts - ts[0]) // bin).astype(np.int64)
    counts = np.bincount(idx, weights=flags.astype(np.float64), minlength=int(idx[-1]) + 1).astype(np.int64)
    starts = ts[0] + np.arange(counts.size) * bin
    bin_inside = (starts >= start) & (starts <= end)
    return WindowFrequency(in_rate, out_rate, starts, counts, bin_inside)


# ------------------------------------------------------------- fault rule


@dataclass(frozen=True)
class FaultPolicy:
    """Declare a fault when ``min_events`` flags fall within ``interval``.

    The target breakage probability that motivates (interval, min_events) is
    not estimable without labelled faults and is not represented here.
    """

    interval: np.timedelta64 = np.timedelta64(60, "m")
    min_events: int = 5

    def __post_init__(self):
        iv = np.timedelta64(self.interval, "s") if not isinstance(self.interval, np.timedelta64) else self.interval
        object.__setattr__(self, "interval", iv.astype("timedelta64[s]"))
        if self.interval <= np.timedelta64(0, "s"):
            raise ConfigError("fault interval must be positive")
        if int(self.min_events) != self.min_events or self.min_events < 1:
            raise ConfigError("min_events must be a positive integer")


@dataclass(frozen=True)
class FaultInterval:
    start: np.datetime64
    end: np.datetime64
    count: int


def fault_flag(report, timestamps, policy: FaultPolicy = FaultPolicy()) -> list[FaultInterval]:
    """Merged intervals where some window [t, t + interval] holds >= min_events flags.

    Each qualifying window contributes the span from its first to its last
    flagged reading; overlapping spans are coalesced.
    """
    flags = _flags_of(report)
    ts = np.asarray(timestamps, dtype="datetime64[s]")
    if flags.size != ts.size:
        raise LengthMismatch(f"{flags.size} flags vs {ts.size} timestamps")
    hits = ts[flags]
    if hits.size == 0:
        return []
    # window opened at each flagged reading; later starts give subsets
    last = np.searchsorted(hits, hits + policy.interval, side="right") - 1
    counts = last - np.arange(hits.size) + 1
    spans = [(i, int(last[i])) for i in np.flatnonzero(counts >= policy.min_events)]
    merged: list[list[int]] = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [FaultInterval(hits[a], hits[b], b - a + 1) for a, b in merged]


# ------------------------------------------------------------------ ensemble


def ensemble_combine(reports, strategy: str = "majority", weights=None) -> AnomalyReport:
    """Vote across aligned reports.

    A point is flagged when the weighted share of flagging reports is strictly
    above one half; the share itself becomes the score. ``majority`` uses
    equal weights.
    """
    reports = list(reports)
    if not reports:
        raise EmptyEnsemble("at least one report is required")
    n = len(reports[0])
    if any(len(r) != n for r in reports):
        raise LengthMismatch("ensemble members are not aligned")
    if strategy == "majority":
        w = np.ones(len(reports))
    elif strategy == "weighted":
        if weights is None or len(weights) != len(reports):
            raise ConfigError("weighted strategy needs one weight per report")
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w <= 0):
            raise NonpositiveWeights("weights must be positive")
    else:
        raise ConfigError(f"unknown strategy {strategy!r}")
    stacked = np.vstack([r.flags for r in reports]).astype(np.float64)
    votes = w @ stacked
    total = float(w.sum())
    flags = votes > 0.5 * total
    members = "+".join(r.detector for r in reports)
    echo = f"strategy={strategy} members={members} weights={','.join(repr(float(v)) for v in w)}"
    return AnomalyReport("ensemble", flags, votes / total, echo)
