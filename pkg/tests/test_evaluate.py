import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorqc.detect import AnomalyReport
from sensorqc.errors import EmptyEnsemble, EmptyRegion, LengthMismatch, NonpositiveWeights
from sensorqc.evaluate import (
    ConfusionCounts,
    FaultPolicy,
    confusion,
    ensemble_combine,
    fault_flag,
    metrics,
    window_frequency,
)

START = np.datetime64("2016-10-18T00:00:00", "s")


def _report(flags, name="x"):
    flags = np.asarray(flags, dtype=bool)
    return AnomalyReport(name, flags, flags.astype(float), "")


def _printed_match(value, printed):
    """A two-decimal figure may be either truncated or rounded."""
    pct = 100.0 * value
    return abs(pct - printed) < 0.01


def test_confusion_examples():
    labels = np.zeros(100, bool)
    labels[::10] = True
    assert confusion(labels, labels) == ConfusionCounts(10, 0, 0, 90)
    assert confusion(np.zeros(100, bool), labels) == ConfusionCounts(0, 0, 10, 90)
    with pytest.raises(LengthMismatch):
        confusion(labels[:5], labels)


def test_confusion_against_tally(rng):
    f = rng.random(1000) < 0.2
    lab = rng.random(1000) < 0.1
    tally = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for a, b in zip(f, lab):
        key = ("t" if a == b else "f") + ("p" if a else "n")
        tally[key] += 1
    assert confusion(_report(f), lab) == ConfusionCounts(**tally)


@pytest.mark.parametrize(
    "counts,printed",
    [
        ((32, 57, 9), (35.95, 78.04, 49.23)),
        ((39, 18, 2), (68.42, 95.12, 79.59)),
        ((30, 16, 11), (65.21, 73.17, 68.96)),
        ((32, 1, 9), (96.96, 78.04, 86.48)),
    ],
)
def test_reference_triples(counts, printed):
    tp, fp, fn = counts
    m = metrics(ConfusionCounts(tp, fp, fn, 3900))
    for v, p in zip((m.precision, m.recall, m.f1), printed):
        assert _printed_match(v, p)


def test_zero_convention():
    m = metrics(ConfusionCounts(0, 0, 0, 50))
    assert (m.precision, m.recall, m.f1, m.accuracy) == (0.0, 0.0, 0.0, 1.0)
    assert metrics(ConfusionCounts(0, 0, 0, 0)).accuracy == 0.0


@settings(max_examples=100)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_f1_bounds(tp, fp, fn, tn):
    m = metrics(ConfusionCounts(tp, fp, fn, tn))
    assert 0.0 <= m.f1 <= 1.0
    assert (m.f1 == 0.0) == (tp == 0)
    if m.precision + m.recall > 0:
        assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
        assert min(m.precision, m.recall) - 1e-12 <= m.f1 <= max(m.precision, m.recall) + 1e-12


# ------------------------------------------------------------- frequency


def _minutes(n):
    return START + np.arange(n) * np.timedelta64(60, "s")


def test_window_frequency_trivial():
    ts = _minutes(300)
    window = (ts[100], ts[199])
    wf = window_frequency(np.zeros(300, bool), ts, np.timedelta64(60, "m"), window)
    assert wf.in_rate == wf.out_rate == 0.0
    flags = np.zeros(300, bool)
    flags[100:200:4] = True
    wf = window_frequency(flags, ts, np.timedelta64(60, "m"), window)
    assert wf.out_rate == 0.0 and wf.in_rate == 25 / 100
    with pytest.raises(EmptyRegion):
        window_frequency(flags, ts, np.timedelta64(60, "m"), (ts[0], ts[-1]))


def test_window_frequency_bins_against_histogram(rng):
    ts = _minutes(1000)
    flags = rng.random(1000) < 0.1
    wf = window_frequency(flags, ts, np.timedelta64(45, "m"), (ts[300], ts[600]))
    offsets = [(t - ts[0]) / np.timedelta64(1, "s") for t in ts[flags]]
    buckets = {}
    for o in offsets:
        buckets[int(o // 2700)] = buckets.get(int(o // 2700), 0) + 1
    for b, c in enumerate(wf.bin_counts):
        assert c == buckets.get(b, 0)
    assert wf.bin_counts.sum() == flags.sum()


# ----------------------------------------------------------------- faults


def _brute_faults(flags, ts, interval, m):
    spans = []
    for i in range(len(ts)):
        inside = [j for j in range(i, len(ts)) if ts[j] <= ts[i] + interval and flags[j]]
        if len(inside) >= m:
            spans.append((ts[inside[0]], ts[inside[-1]]))
    spans.sort()
    merged = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def test_fault_trivial():
    ts = _minutes(20)
    assert fault_flag(np.zeros(20, bool), ts) == []
    flags = np.zeros(20, bool)
    flags[[2, 9, 15]] = True
    out = fault_flag(flags, ts, FaultPolicy(np.timedelta64(1, "m"), 1))
    assert [(f.start, f.end, f.count) for f in out] == [(ts[i], ts[i], 1) for i in (2, 9, 15)]


def test_fault_against_all_windows(rng):
    ts = _minutes(600)
    interval = np.timedelta64(60, "m")
    for _ in range(5):
        flags = rng.random(600) < 0.05
        flags[300:360:3] = True
        got = fault_flag(flags, ts, FaultPolicy(interval, 5))
        assert [(f.start, f.end) for f in got] == _brute_faults(flags, ts, interval, 5)
        for f in got:
            assert f.count >= 5
            assert f.count == int(flags[(ts >= f.start) & (ts <= f.end)].sum())
        assert all(a.end < b.start for a, b in zip(got, got[1:]))


# --------------------------------------------------------------- ensemble


def test_ensemble_rules():
    a = _report([1, 0, 1, 0], "a")
    b = _report([1, 1, 0, 0], "b")
    c = _report([0, 0, 1, 0], "c")
    assert ensemble_combine([a]).flags.tolist() == a.flags.tolist()
    assert ensemble_combine([a, b, c]).flags.tolist() == [True, False, True, False]
    assert ensemble_combine([a, a, a]).flags.tolist() == a.flags.tolist()
    w = ensemble_combine([_report([1]), _report([0]), _report([0])], "weighted", [3, 1, 1])
    assert w.flags.tolist() == [3 > 2.5] and w.scores[0] == pytest.approx(0.6)
    # an exact half is not a majority
    assert ensemble_combine([a, b]).flags.tolist() == [True, False, False, False]


def test_ensemble_errors():
    with pytest.raises(EmptyEnsemble):
        ensemble_combine([])
    with pytest.raises(LengthMismatch):
        ensemble_combine([_report([1, 0]), _report([1])])
    with pytest.raises(NonpositiveWeights):
        ensemble_combine([_report([1]), _report([0])], "weighted", [1, 0])
