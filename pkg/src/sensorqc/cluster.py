"""k-means, large/small cluster split and LDCOF scoring on multivariate features."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .detect import AnomalyReport
from .errors import ConfigError, DegenerateCluster, DimensionMismatch, EmptyJoin, TooFewRows
from .synth import Pcg32

TEMPORAL_FEATURES = ("none", "month", "season", "weekday")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """z-scored rows plus the (mean, std) used per column."""

    rows: np.ndarray
    column_names: tuple
    normalization: tuple
    timestamps: np.ndarray | None = None
    dropped: int = 0

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


def zscore_columns(raw: np.ndarray):
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    # constant columns map to 0 by convention
    z = np.where(std > 0, (raw - mean) / safe, 0.0)
    return z, tuple(zip(mean.tolist(), std.tolist()))


def temporal_code(timestamps: np.ndarray, kind: str) -> np.ndarray:
    """month 1-12, season 0-3 (Dec-Feb=0 ... Sep-Nov=3), weekday 0-6 (Mon=0)."""
    months = timestamps.astype("datetime64[M]").astype(np.int64) % 12 + 1
    if kind == "month":
        return months.astype(np.float64)
    if kind == "season":
        return ((months % 12) // 3).astype(np.float64)
    if kind == "weekday":
        days = timestamps.astype("datetime64[D]").astype(np.int64)
        return ((days + 3) % 7).astype(np.float64)  # 1970-01-01 was a Thursday
    raise ConfigError(f"unknown temporal feature {kind!r}")


def build_features(ammonia, oxygen=None, temporal: str = "none", normalization=None) -> FeatureMatrix:
    """Inner-join the series on timestamp and z-score every column.

    ``oxygen=None`` yields an ammonia-only matrix (plus the temporal column).
    Pass a training matrix's ``normalization`` to score new data on the same
    scale instead of re-standardizing it.
    """
    if temporal not in TEMPORAL_FEATURES:
        raise ConfigError(f"temporal must be one of {TEMPORAL_FEATURES}, got {temporal!r}")
    ts = ammonia.timestamps
    cols = [ammonia.values]
    names = ["NH4"]
    dropped = 0
    if oxygen is not None:
        common, ia, io = np.intersect1d(ammonia.timestamps, oxygen.timestamps, return_indices=True)
        dropped = len(ammonia) + len(oxygen) - 2 * common.size
        if common.size == 0:
            raise EmptyJoin("no timestamps shared by the two series")
        ts = common
        cols = [ammonia.values[ia], oxygen.values[io]]
        names.append("O2")
    if temporal != "none":
        cols.append(temporal_code(ts, temporal))
        names.append(temporal)
    raw = np.column_stack(cols)
    if normalization is None:
        z, norm = zscore_columns(raw)
    else:
        if len(normalization) != raw.shape[1]:
            raise DimensionMismatch(f"normalization has {len(normalization)} columns, features have {raw.shape[1]}")
        norm = tuple(normalization)
        mean = np.array([m for m, _ in norm])
        std = np.array([s for _, s in norm])
        z = np.where(std > 0, (raw - mean) / np.where(std > 0, std, 1.0), 0.0)
    return FeatureMatrix(np.ascontiguousarray(z), tuple(names), norm, ts, dropped)


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centroids: np.ndarray
    assignments: np.ndarray
    sizes: np.ndarray
    avg_dist: np.ndarray
    seed: int
    inertia: float
    inertia_history: tuple = ()
    member_dist: np.ndarray | None = field(default=None, repr=False)
    large_set: tuple = ()
    small_set: tuple = ()
    columns: tuple = ()
    auto_threshold: float = float("nan")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _initial_centroids(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = Pcg32(seed)
    return points[rng.sample_indices(points.shape[0], k)].copy()


def _update_centroids(points, labels, k, old):
    dim = points.shape[1]
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, dim))
    for d in range(dim):
        sums[:, d] = np.bincount(labels, weights=points[:, d], minlength=k)
    centroids = old.copy()
    nonempty = counts > 0
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    return centroids, counts


def kmeans_fit(matrix, k: int, seed: int = 0, max_iter: int = 300) -> ClusterModel:
    """Lloyd's algorithm from ``k`` distinct, seeded rows.

    An emptied cluster is re-seeded at the point farthest from its current
    centroid. Ties in assignment go to the lowest cluster index.
    """
    points = np.ascontiguousarray(matrix.rows if isinstance(matrix, FeatureMatrix) else matrix, dtype=np.float64)
    n = points.shape[0]
    if k < 1 or max_iter < 1:
        raise ConfigError("k and max_iter must be positive")
    if n < k:
        raise TooFewRows(f"{n} rows cannot form {k} clusters")
    centroids = _initial_centroids(points, k, seed)
    labels, dist2 = kernels.assign(points, centroids)
    history = [float(dist2.sum())]
    for _ in range(max_iter):
        centroids, counts = _update_centroids(points, labels, k, centroids)
        moved = set()
        for c in np.flatnonzero(counts == 0):
            _, d2 = kernels.assign(points, centroids)
            order = np.argsort(-d2, kind="stable")
            far = next(int(i) for i in order if int(i) not in moved)
            moved.add(far)
            centroids[c] = points[far]
        new_labels, dist2 = kernels.assign(points, centroids)
        history.append(float(dist2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    centroids, counts = _update_centroids(points, labels, k, centroids)
    labels, dist2 = kernels.assign(points, centroids)
    counts = np.bincount(labels, minlength=k)
    member_dist = np.sqrt(dist2)
    sums = np.bincount(labels, weights=member_dist, minlength=k)
    avg = np.divide(sums, counts, out=np.zeros(k), where=counts > 0)
    columns = matrix.column_names if isinstance(matrix, FeatureMatrix) else ()
    inertia = float(dist2.sum())
    history.append(inertia)
    model = ClusterModel(
        centroids=centroids,
        assignments=labels,
        sizes=counts,
        avg_dist=avg,
        seed=seed,
        inertia=inertia,
        inertia_history=tuple(history),
        member_dist=member_dist,
        columns=tuple(columns),
    )
    return model


def split_clusters(model_or_sizes, alpha: float = 0.75, beta: float = 0.25) -> tuple[tuple, tuple]:
    """Partition cluster indices into (large, small).

    Clusters are ordered by size (descending, ties by index). The boundary b
    is the first position where the cumulative size reaches alpha * |D| or
    the next cluster is at most beta times the current one.
    """
    sizes = np.asarray(model_or_sizes.sizes if isinstance(model_or_sizes, ClusterModel) else model_or_sizes)
    k = sizes.size
    order = sorted(range(k), key=lambda c: (-int(sizes[c]), c))
    total = float(sizes.sum())
    cum = 0.0
    boundary = k
    for pos, c in enumerate(order):
        cum += float(sizes[c])
        if cum >= alpha * total:
            boundary = pos + 1
            break
        if pos + 1 < k and sizes[order[pos + 1]] <= beta * sizes[c]:
            boundary = pos + 1
            break
    return tuple(order[:boundary]), tuple(order[boundary:])


def with_split(model: ClusterModel, alpha: float = 0.75, beta: float = 0.25) -> ClusterModel:
    """Attach the large/small split and the automatic score threshold.

    The threshold is the mean plus one (population) std of distance/d_avg
    over the training members of large clusters.
    """
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ConfigError("alpha and beta must lie in (0, 1)")
    large, small = split_clusters(model, alpha, beta)
    threshold = float("nan")
    if model.member_dist is not None:
        in_large = np.isin(model.assignments, large)
        avg = model.avg_dist[model.assignments[in_large]]
        ok = avg > 0
        if ok.any():
            ratios = model.member_dist[in_large][ok] / avg[ok]
            threshold = float(ratios.mean() + ratios.std())
    return replace(model, large_set=large, small_set=small, auto_threshold=threshold)


def ldcof_scores(model: ClusterModel, points) -> np.ndarray:
    points = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    if points.shape[1] != model.centroids.shape[1]:
        raise DimensionMismatch(f"points have {points.shape[1]} columns, model has {model.centroids.shape[1]}")
    if not model.large_set:
        raise ConfigError("model has no large/small split; call with_split first")
    large = np.array(model.large_set)
    is_large = np.zeros(model.k, dtype=bool)
    is_large[large] = True
    labels, dist2 = kernels.assign(points, model.centroids)
    scores = np.empty(points.shape[0])

    in_large = is_large[labels]
    own_avg = model.avg_dist[labels[in_large]]
    if np.any(own_avg == 0):
        raise DegenerateCluster("large cluster with zero average distance")
    scores[in_large] = np.sqrt(dist2[in_large]) / own_avg

    rest = ~in_large
    if rest.any():
        large_avg = model.avg_dist[large]
        diff = points[rest][:, None, :] - model.centroids[large][None, :, :]
        dist = np.sqrt(np.einsum("nkd,nkd->nk", diff, diff))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(large_avg > 0, dist / np.where(large_avg > 0, large_avg, 1.0), np.inf)
        best = ratios.min(axis=1)
        if not np.all(np.isfinite(best)):
            raise DegenerateCluster("every large cluster has zero average distance")
        scores[rest] = best
    return scores


def ldcof_score(model: ClusterModel, point) -> float:
    point = np.asarray(point, dtype=np.float64)
    if point.ndim != 1:
        raise DimensionMismatch("a single feature vector is expected")
    return float(ldcof_scores(model, point[None, :])[0])


@dataclass(frozen=True)
class LdcofConfig:
    k_clusters: int = 12
    alpha: float = 0.75
    beta: float = 0.25
    score_threshold: float | str = "auto"

    def __post_init__(self):
        if int(self.k_clusters) != self.k_clusters or self.k_clusters < 1:
            raise ConfigError(f"k_clusters must be a positive integer, got {self.k_clusters}")
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise ConfigError("alpha and beta must lie in (0, 1)")
        if self.score_threshold != "auto" and not isinstance(self.score_threshold, (int, float)):
            raise ConfigError(f"score_threshold must be a number or 'auto', got {self.score_threshold!r}")

    def echo(self) -> str:
        return f"k={self.k_clusters} alpha={self.alpha!r} beta={self.beta!r} threshold={self.score_threshold}"


def ldcof_detect(model: ClusterModel, matrix, cfg: LdcofConfig = LdcofConfig()) -> AnomalyReport:
    rows = matrix.rows if isinstance(matrix, FeatureMatrix) else matrix
    if not model.large_set:
        model = with_split(model, cfg.alpha, cfg.beta)
    scores = ldcof_scores(model, rows)
    threshold = model.auto_threshold if cfg.score_threshold == "auto" else float(cfg.score_threshold)
    echo = f"{cfg.echo()} effective_threshold={threshold!r} seed={model.seed}"
    return AnomalyReport("ldcof", scores > threshold, scores, echo)


def train_ldcof(matrix, cfg: LdcofConfig = LdcofConfig(), seed: int = 0, max_iter: int = 300) -> ClusterModel:
    return with_split(kmeans_fit(matrix, cfg.k_clusters, seed, max_iter), cfg.alpha, cfg.beta)


# ------------------------------------------------------------ model export


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_model(model: ClusterModel, fh) -> None:
    fh.write(f"k={model.k}\n")
    fh.write(f"seed={model.seed}\n")
    fh.write(f"columns={','.join(model.columns)}\n")
    for row in model.centroids:
        fh.write(",".join(_fmt(v) for v in row) + "\n")
    fh.write(f"large={','.join(str(c) for c in model.large_set)}\n")
    fh.write(f"small={','.join(str(c) for c in model.small_set)}\n")
    fh.write(f"avg_dist={','.join(_fmt(v) for v in model.avg_dist)}\n")
    fh.write(f"sizes={','.join(str(int(s)) for s in model.sizes)}\n")
    fh.write(f"auto_threshold={_fmt(model.auto_threshold)}\n")


def load_model(fh) -> ClusterModel:
    lines = [ln.strip() for ln in fh if ln.strip()]
    header = {}
    centroid_rows = []
    for ln in lines:
        key, sep, val = ln.partition("=")
        if sep and key.isidentifier():
            header[key] = val
        else:
            centroid_rows.append([float(v) for v in ln.split(",")])

    def ints(text):
        return tuple(int(v) for v in text.split(",")) if text else ()

    k = int(header["k"])
    centroids = np.array(centroid_rows, dtype=np.float64).reshape(k, -1)
    avg = np.array([float(v) for v in header["avg_dist"].split(",")])
    sizes = np.array(ints(header.get("sizes", "")) or (0,) * k)
    cols = tuple(header.get("columns", "").split(",")) if header.get("columns") else ()
    return ClusterModel(
        centroids=centroids,
        assignments=np.zeros(0, dtype=np.int64),
        sizes=sizes,
        avg_dist=avg,
        seed=int(header["seed"]),
        inertia=float("nan"),
        large_set=ints(header["large"]),
        small_set=ints(header["small"]),
        columns=cols,
        auto_threshold=float(header.get("auto_threshold", "nan")),
    )
