import io
import math

import numpy as np
import pytest

from sensorqc.cluster import (
    ClusterModel,
    LdcofConfig,
    build_features,
    dump_model,
    kmeans_fit,
    ldcof_detect,
    ldcof_score,
    ldcof_scores,
    load_model,
    split_clusters,
    train_ldcof,
    with_split,
)
from sensorqc.errors import DegenerateCluster, DimensionMismatch, EmptyJoin, TooFewRows
from sensorqc.series import TimeSeries


def _blobs(seed, n=200, offset=20.0):
    r = np.random.default_rng(seed)
    a = r.normal(0, 1, (n, 2))
    b = r.normal(0, 1, (n, 2)) + offset
    return np.vstack([a, b]), np.r_[np.zeros(n, int), np.ones(n, int)]


def _brute_scores(model, points):
    """Score every point from an explicit distance table."""
    out = []
    for p in points:
        d = [math.dist(p, c) for c in model.centroids]
        nearest = min(range(model.k), key=lambda c: (d[c], c))
        if nearest in model.large_set:
            out.append(d[nearest] / model.avg_dist[nearest])
        else:
            out.append(min(d[c] / model.avg_dist[c] for c in model.large_set))
    return np.array(out)


# ------------------------------------------------------------------ features


def test_single_point_features_degenerate_to_zero():
    a = TimeSeries.regular([3.0])
    b = TimeSeries.regular([7.0])
    fm = build_features(a, b)
    assert fm.rows.shape == (1, 2)
    assert np.all(fm.rows == 0.0)


def test_month_feature_raw_value():
    a = TimeSeries.regular([1.0, 2.0], start="2016-05-10T00:00:00")
    fm = build_features(a, a, temporal="month")
    assert fm.column_names == ("NH4", "O2", "month")
    mean, std = fm.normalization[2]
    assert mean == 5.0 and std == 0.0


def test_season_and_weekday_codes():
    a = TimeSeries.regular([1.0], start="2016-10-18T12:00:00")  # a Tuesday in autumn
    assert build_features(a, temporal="weekday").normalization[1][0] == 1.0
    assert build_features(a, temporal="season").normalization[1][0] == 3.0


def test_join_with_mismatched_timestamps(rng):
    n = 500
    a = TimeSeries.regular(rng.normal(size=n))
    ts = a.timestamps.copy()
    moved = rng.choice(n, n // 10, replace=False)
    ts[moved] += np.timedelta64(30, "s")
    order = np.argsort(ts, kind="stable")
    b = TimeSeries("O2", ts[order], rng.normal(size=n))
    fm = build_features(a, b)
    expected = len(set(a.timestamps.tolist()) & set(b.timestamps.tolist()))
    assert len(fm) == expected == n - n // 10
    assert fm.dropped == 2 * (n // 10)


def test_empty_join():
    a = TimeSeries.regular([1.0, 2.0])
    b = TimeSeries.regular([1.0, 2.0], start="2017-01-01T00:00:00")
    with pytest.raises(EmptyJoin):
        build_features(a, b)


def test_zscored_columns(rng):
    a = TimeSeries.regular(rng.normal(5, 2, 300))
    b = TimeSeries.regular(rng.normal(-1, 0.3, 300))
    fm = build_features(a, b)
    np.testing.assert_allclose(fm.rows.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(fm.rows.std(axis=0), 1.0, atol=1e-12)


# ------------------------------------------------------------------ k-means


def test_k_equals_rows():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 5.0], [3.0, 3.0]])
    m = kmeans_fit(pts, 4, seed=1)
    assert m.inertia == 0.0
    assert sorted(map(tuple, m.centroids)) == sorted(map(tuple, pts))


def test_k_one_is_mean(rng):
    pts = rng.normal(size=(50, 3))
    m = kmeans_fit(pts, 1)
    np.testing.assert_allclose(m.centroids[0], pts.mean(axis=0), atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_two_blobs(seed):
    pts, truth = _blobs(seed)
    m = kmeans_fit(pts, 2, seed=seed)
    labels = m.assignments
    same = np.array_equal(labels, truth) or np.array_equal(labels, 1 - truth)
    assert same


def test_inertia_non_increasing(rng):
    for seed in range(10):
        pts = rng.normal(size=(300, 2)) * [1, 3]
        hist = kmeans_fit(pts, 6, seed=seed).inertia_history
        assert all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(hist, hist[1:]))


def test_too_few_rows_and_determinism(rng):
    pts = rng.normal(size=(40, 2))
    with pytest.raises(TooFewRows):
        kmeans_fit(pts[:3], 4)
    a = kmeans_fit(pts, 5, seed=3)
    b = kmeans_fit(pts, 5, seed=3)
    np.testing.assert_array_equal(a.centroids, b.centroids)
    np.testing.assert_array_equal(a.assignments, b.assignments)


def test_empty_cluster_reseeded():
    # duplicated rows force an empty cluster in the first update
    pts = np.array([[0.0, 0.0]] * 5 + [[10.0, 10.0]] * 5 + [[0.0, 20.0]])
    m = kmeans_fit(pts, 3, seed=0)
    assert np.all(m.sizes > 0)


# --------------------------------------------------------------------- split


def test_split_examples():
    assert split_clusters([50, 30, 10, 10], 0.75, 0.25) == ((0, 1), (2, 3))
    assert split_clusters([40, 39, 2, 1], 0.75, 0.25) == ((0, 1), (2, 3))
    assert split_clusters([7], 0.75, 0.25) == ((0,), ())


def test_split_orders_by_size(rng):
    for _ in range(50):
        sizes = rng.integers(1, 100, rng.integers(1, 10))
        large, small = split_clusters(sizes, 0.75, 0.25)
        assert set(large) | set(small) == set(range(sizes.size))
        assert not set(large) & set(small)
        assert large
        if small:
            assert min(sizes[list(large)]) >= max(sizes[list(small)])


# -------------------------------------------------------------------- LDCOF


def _hand_model():
    centroids = np.array([[0.0, 0.0], [10.0, 0.0], [5.0, 8.0]])
    return ClusterModel(
        centroids=centroids,
        assignments=np.zeros(0, int),
        sizes=np.array([50, 40, 3]),
        avg_dist=np.array([2.0, 1.0, 0.5]),
        seed=0,
        inertia=0.0,
        large_set=(0, 1),
        small_set=(2,),
    )


def test_hand_model_scores():
    m = _hand_model()
    assert ldcof_score(m, [0.0, 0.0]) == 0.0
    assert ldcof_score(m, [2.0, 0.0]) == 1.0
    assert ldcof_score(m, [10.0, 1.0]) == 1.0
    # nearest centroid is the small one; min over large of distance / d_avg
    p = [5.0, 7.0]
    expected = min(math.hypot(5, 7) / 2.0, math.hypot(5, 7) / 1.0)
    assert ldcof_score(m, p) == pytest.approx(expected)


def test_score_errors():
    m = _hand_model()
    with pytest.raises(DimensionMismatch):
        ldcof_score(m, [1.0, 2.0, 3.0])
    bad = ClusterModel(**{**m.__dict__, "avg_dist": np.array([0.0, 1.0, 0.5])})
    with pytest.raises(DegenerateCluster):
        ldcof_score(bad, [0.1, 0.0])


def test_scores_match_brute_force_on_seeded_models():
    for seed in range(20):
        r = np.random.default_rng(seed)
        pts = np.vstack([r.normal(c, 1, (60, 2)) for c in ((0, 0), (8, 0), (0, 8))] + [r.normal(20, 1, (4, 2))])
        m = train_ldcof(pts, LdcofConfig(k_clusters=5), seed=seed)
        probe = r.normal(4, 6, (100, 2))
        np.testing.assert_allclose(ldcof_scores(m, probe), _brute_scores(m, probe), rtol=1e-12)
        assert np.all(ldcof_scores(m, pts) >= 0)


def test_rotation_invariance(rng):
    pts, _ = _blobs(1, n=80, offset=6.0)
    m = train_ldcof(pts, LdcofConfig(k_clusters=4), seed=2)
    theta = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    rotated = ClusterModel(**{**m.__dict__, "centroids": m.centroids @ rot.T})
    probe = rng.normal(3, 5, (50, 2))
    np.testing.assert_allclose(ldcof_scores(rotated, probe @ rot.T), ldcof_scores(m, probe), rtol=1e-9)


def test_detect_thresholds():
    r = np.random.default_rng(33)
    pts = np.vstack([r.normal(c, 1, (100, 2)) for c in ((0, 0), (10, 0), (0, 10))])
    outliers = np.array([[30.0, 30.0], [-25.0, 5.0], [5.0, -30.0], [40.0, -10.0], [-20.0, -20.0]])
    m = train_ldcof(pts, LdcofConfig(k_clusters=3), seed=1)
    data = np.vstack([pts, outliers])
    assert not ldcof_detect(m, data, LdcofConfig(k_clusters=3, score_threshold=math.inf)).flags.any()
    fixed = ldcof_detect(m, data, LdcofConfig(k_clusters=3, score_threshold=1.0))
    assert fixed.flags.tolist() == (_brute_scores(m, data) > 1.0).tolist()
    auto = ldcof_detect(m, data)
    assert auto.flags[-5:].all()
    brute = _brute_scores(m, data)
    assert auto.flags.tolist() == (brute > m.auto_threshold).tolist()
    fp_rate = auto.flags[:-5].mean()
    assert 0.0 < fp_rate < 0.5


def test_auto_threshold_definition():
    pts, _ = _blobs(8, n=100, offset=7.0)
    m = train_ldcof(pts, LdcofConfig(k_clusters=3), seed=4)
    members = np.isin(m.assignments, m.large_set)
    ratios = np.linalg.norm(pts[members] - m.centroids[m.assignments[members]], axis=1) / m.avg_dist[m.assignments[members]]
    assert m.auto_threshold == pytest.approx(ratios.mean() + ratios.std(), rel=1e-12)


def test_model_roundtrip(rng):
    pts = rng.normal(size=(120, 3))
    m = train_ldcof(pts, LdcofConfig(k_clusters=4), seed=7)
    buf = io.StringIO()
    dump_model(m, buf)
    text = buf.getvalue()
    assert text.startswith("k=4\nseed=7\n")
    back = load_model(io.StringIO(text))
    np.testing.assert_array_equal(back.centroids, m.centroids)
    np.testing.assert_array_equal(back.avg_dist, m.avg_dist)
    assert back.large_set == m.large_set and back.small_set == m.small_set
    assert back.auto_threshold == m.auto_threshold
    probe = rng.normal(size=(30, 3))
    np.testing.assert_array_equal(ldcof_scores(back, probe), ldcof_scores(m, probe))


def test_with_split_attaches_sets(rng):
    m = kmeans_fit(rng.normal(size=(60, 2)), 3, seed=1)
    assert m.large_set == ()
    s = with_split(m)
    assert s.large_set and math.isfinite(s.auto_threshold)
