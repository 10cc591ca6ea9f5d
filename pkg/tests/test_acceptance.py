"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints, then
asserts the criterion at its stated tolerance.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats as sps

import conftest
import oracles
from sensorqc import cli
from sensorqc.cluster import LdcofConfig, kmeans_fit, ldcof_score, ldcof_scores, split_clusters, train_ldcof
from sensorqc.detect import FilterConfig, LowHighOnline, esd_test
from sensorqc.evaluate import ConfusionCounts, metrics
from sensorqc.ingest import condense_dst
from sensorqc.pipeline import load_config, run_pipeline
from sensorqc.series import TimeSeries
from sensorqc.stats import decompose, kendall, pearson, spearman
from sensorqc.tdist import t_ppf


def record(number, ok, detail):
    conftest.ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(conftest.ACCEPTANCE[number])
    assert ok, detail


def _printed(value, figure):
    # printed two-decimal figures are truncated or rounded; either is accepted
    return abs(100.0 * value - figure) < 0.01


# ---------------------------------------------------------------- 1 metrics

TRIPLES = [
    ((32, 57, 9), (35.95, 78.04, 49.23)),
    ((31, 17, 10), (64.58, 75.61, 69.66)),
    ((39, 18, 2), (68.42, 95.12, 79.59)),
    ((30, 16, 11), (65.21, 73.17, 68.96)),
    ((31, 14, 10), (68.88, 75.61, 72.09)),
]


def test_criterion_01_metric_arithmetic():
    t0 = time.perf_counter()
    bad = []
    for (tp, fp, fn), printed in TRIPLES:
        m = metrics(ConfusionCounts(tp, fp, fn, 4000 - tp - fp - fn))
        for name, v, p in zip(("P", "R", "F1"), (m.precision, m.recall, m.f1), printed):
            if not _printed(v, p):
                bad.append(f"{(tp, fp, fn)} {name}={100 * v:.4f} vs {p}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1.0
    record(1, ok, f"5 triples, {len(bad)} mismatches, {elapsed * 1000:.1f} ms" + (f" {bad}" if bad else ""))


# ----------------------------------------------------- 2 S-ESD back-derivation


def test_criterion_02_sesd_back_derivation():
    m = metrics(ConfusionCounts(32, 1, 9, 4000 - 42))
    positives = 32 + 9
    ok = (
        positives == 41
        and _printed(m.precision, 96.96)
        and _printed(m.recall, 78.04)
        and abs(100 * m.f1 - 86.48) <= 0.01
    )
    record(2, ok, f"P={100 * m.precision:.4f} R={100 * m.recall:.4f} F1={100 * m.f1:.4f}")


# --------------------------------------------------------- 3 ordering


ORDERING_CONFIG = """
[data]
source = synthetic

[synthetic]
n = 4320
period = 1440
level = 10
amplitude = 2
trend = 0.5
noise = 0.25

[inject]
rate = 0.01
offset_min = 1
offset_max = 4

[detect]
algorithms = baseline,lowhigh-offline,gaussian,sesd,ldcof
"""


def test_criterion_03_precision_ordering(tmp_path):
    path = tmp_path / "ordering.ini"
    path.write_text(ORDERING_CONFIG)
    cfg = load_config(path)
    t0 = time.perf_counter()
    precision = {}
    for seed in range(10):
        for name, _, m in run_pipeline(cfg, seed=seed).rows:
            precision.setdefault(name, []).append(m.precision)
    elapsed = time.perf_counter() - t0
    mean = {k: float(np.mean(v)) for k, v in precision.items()}
    middle = ("ldcof", "gaussian", "lowhigh-offline")
    ok = all(mean["sesd"] > mean[d] > mean["baseline"] for d in middle) and elapsed < 30
    detail = " ".join(f"{k}={mean[k]:.3f}" for k in ("sesd", *middle, "baseline"))
    record(3, ok, f"mean precision over 10 seeds: {detail}; {elapsed:.1f} s")


# ------------------------------------------------------------ 4 ESD oracle


def test_criterion_04_esd_oracle():
    rng = np.random.default_rng(4)
    mismatches = 0
    worst_t = 0.0
    for _ in range(100):
        n = int(rng.integers(12, 201))
        k = int(rng.integers(1, 11))
        x = rng.normal(0, 1, n)
        spikes = rng.choice(n, int(rng.integers(0, k + 1)), replace=False)
        x[spikes] += rng.choice([-1, 1], spikes.size) * rng.uniform(2, 8, spikes.size)
        if esd_test(x, k).tolist() != oracles.generalized_esd(x.tolist(), k):
            mismatches += 1
        for j in range(1, k + 1):
            p = 1 - 0.05 / (2 * (n - j + 1))
            worst_t = max(worst_t, abs(t_ppf(p, n - j - 1) - sps.t.ppf(p, n - j - 1)))
    ok = mismatches == 0 and worst_t <= 1e-6
    record(4, ok, f"100 instances, {mismatches} mismatched sets, worst t-quantile error {worst_t:.2e}")


# --------------------------------------------------- 5 decomposition identity


def test_criterion_05_decomposition_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(50):
        period = int(rng.integers(4, 100))
        n = int(rng.integers(2 * period, 6 * period + 1))
        t = np.arange(n)
        x = rng.normal(0, 1) * t / n + rng.uniform(0.5, 3) * np.sin(2 * np.pi * t / period) + rng.normal(0, 0.5, n) + 10
        d = decompose(x, period)
        ok = d.defined
        worst = max(worst, float(np.max(np.abs(d.trend[ok] + d.seasonal[ok] + d.residual[ok] - x[ok]))))
    record(5, worst <= 1e-9, f"50 series, worst reconstruction error {worst:.2e}")


# ---------------------------------------------------------- 6 correlation


def test_criterion_06_correlation_oracles():
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(5, 201))
        if i % 2:
            # tie-heavy integer data
            x = rng.integers(0, 5, n).astype(float)
            y = (x + rng.integers(-2, 3, n)).astype(float)
        else:
            x = rng.normal(size=n)
            y = 0.5 * x + rng.normal(size=n)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        xs, ys = x.tolist(), y.tolist()
        worst = max(
            worst,
            abs(pearson(x, y) - oracles.pearson(xs, ys)),
            abs(spearman(x, y) - oracles.spearman(xs, ys)),
            abs(kendall(x, y) - oracles.kendall_tau_b(xs, ys)),
        )
    record(6, worst <= 1e-12, f"100 pairs, worst deviation {worst:.2e}")


# ------------------------------------------------------- 7 k-means / LDCOF


def _brute_scores(model, points):
    out = []
    for p in points:
        d = [math.dist(p, c) for c in model.centroids]
        nearest = min(range(model.k), key=lambda c: (d[c], c))
        if nearest in model.large_set:
            out.append(d[nearest] / model.avg_dist[nearest])
        else:
            out.append(min(d[c] / model.avg_dist[c] for c in model.large_set))
    return np.array(out)


def test_criterion_07_kmeans_ldcof():
    problems = []
    for seed in range(20):
        r = np.random.default_rng(700 + seed)
        centres = r.uniform(-10, 10, (4, 3))
        pts = np.vstack([r.normal(c, 1, (int(r.integers(10, 80)), 3)) for c in centres] + [r.normal(0, 15, (5, 3))])
        hist = kmeans_fit(pts, 6, seed=seed).inertia_history
        if any(b > a for a, b in zip(hist, hist[1:])):
            problems.append(f"seed {seed}: inertia rose")
        model = train_ldcof(pts, LdcofConfig(k_clusters=6), seed=seed)
        for c in model.large_set:
            if ldcof_score(model, model.centroids[c]) != 0.0:
                problems.append(f"seed {seed}: nonzero score at centroid {c}")
        probe = np.vstack([pts, r.normal(0, 12, (50, 3))])
        if not np.allclose(ldcof_scores(model, probe), _brute_scores(model, probe), rtol=1e-12, atol=0):
            problems.append(f"seed {seed}: scores differ from brute force")
    if split_clusters([50, 30, 10, 10], 0.75, 0.25) != ((0, 1), (2, 3)):
        problems.append("split [50,30,10,10]")
    if split_clusters([40, 39, 2, 1], 0.75, 0.25) != ((0, 1), (2, 3)):
        problems.append("split [40,39,2,1]")
    record(7, not problems, f"20 models, split examples; problems: {problems or 'none'}")


# ------------------------------------------------------ 8 streaming filter


def test_criterion_08_streaming_consistency():
    rng = np.random.default_rng(8)
    configs = [(20, 0.2), (20, 1.0), (1440, 0.5), (60, 0.8)]
    mismatched = 0
    for s in range(20):
        window, alpha = configs[s % len(configs)]
        x = rng.normal(0, 1, 5000) + np.sin(np.arange(5000) / 200.0) + (rng.random(5000) < 0.01) * 4
        f = LowHighOnline(FilterConfig(window=window, alpha=alpha, mode="online"))
        incremental = [f.update(v) for v in x]
        batch = []
        for i in range(x.size):
            w = x[max(0, i - window + 1) : i + 1]
            avg = w.mean()
            sd = w.std(ddof=1) if w.size > 1 else 0.0
            batch.append(bool(alpha * x[i] > avg + sd or alpha * x[i] < avg - sd))
        if incremental != batch:
            mismatched += 1
    record(8, mismatched == 0, f"20 streams of 5000 points, {mismatched} with differing flags")


# ---------------------------------------------------- 9 pipeline determinism


def test_criterion_09_pipeline_determinism(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(ORDERING_CONFIG.replace("algorithms = baseline,lowhigh-offline,gaussian,sesd,ldcof", ""))
    outputs = []
    for i, threads in enumerate((1, 1, 4)):
        out = tmp_path / f"out{i}.csv"
        code = cli.main(["pipeline", "--config", str(path), "--seed", "11", "--threads", str(threads), "-o", str(out)])
        assert code == 0
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    record(9, ok, f"two sequential runs and a 4-thread run, {len(outputs[0])} bytes each, identical={ok}")


# ---------------------------------------------------------- 10 DST repair


def test_criterion_10_dst_repair():
    start = np.datetime64("2016-10-30T00:00:00", "s")
    minute = np.timedelta64(60, "s")
    stamps = np.concatenate(
        [start + np.arange(180) * minute, start + (120 + np.arange(60)) * minute, start + (180 + np.arange(30)) * minute]
    )
    values = np.arange(stamps.size, dtype=float) * 0.5 + 3.0
    out, report = condense_dst(TimeSeries("NH4", stamps, values))
    span = values[120:240]
    expected = (span[0::2] + span[1::2]) / 2
    got = out.values[120:180]
    ok = (
        out.strictly_increasing
        and len(out) == stamps.size - 60
        and report.condensed_pairs == 60
        and np.array_equal(got, expected)
        and np.array_equal(out.timestamps[120:180], start + (120 + np.arange(60)) * minute)
    )
    record(10, ok, f"120 readings -> {int(report.condensed_pairs)} pairs, strictly increasing={out.strictly_increasing}")
