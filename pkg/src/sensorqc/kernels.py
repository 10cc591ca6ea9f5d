"""Hot inner loops, each in two flavours.

``*_nb`` functions are explicit loops compiled with numba; ``*_np`` functions
are vectorized numpy equivalents. The unsuffixed public names are bound to
one flavour at import time according to :mod:`sensorqc._backend`. Both
flavours accept float64 arrays and return identical shapes; values agree to
floating-point round-off (summation order differs between them).
"""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._backend import USE_NUMBA, njit

_SQRT2 = math.sqrt(2.0)
# rows per block for the sliding-window and pair-scan fallbacks
_BLOCK_ELEMS = 1 << 22


# ---------------------------------------------------------------- sliding mean


@njit
def sliding_mean_nb(x, window):
    n = x.size
    out = np.empty(n)
    mean = 0.0
    for i in range(n):
        if i < window:
            mean += (x[i] - mean) / (i + 1)
        else:
            mean += (x[i] - x[i - window]) / window
        out[i] = mean
    return out


def sliding_mean_np(x, window):
    n = x.size
    csum = np.cumsum(x)
    sums = csum.copy()
    sums[window:] = csum[window:] - csum[:-window]
    counts = np.minimum(np.arange(1, n + 1), window)
    return sums / counts


# ------------------------------------------------------- sliding mean and std


@njit
def window_stats_nb(x, window):
    """Mean and sample std of the last ``window`` points, partial at the start."""
    n = x.size
    means = np.empty(n)
    stds = np.empty(n)
    mean = 0.0
    m2 = 0.0
    for i in range(n):
        xi = x[i]
        if i < window:
            count = i + 1
            delta = xi - mean
            mean += delta / count
            m2 += delta * (xi - mean)
        else:
            count = window
            old = x[i - window]
            new_mean = mean + (xi - old) / window
            m2 += (xi - old) * (xi - new_mean + old - mean)
            mean = new_mean
        if m2 < 0.0:
            m2 = 0.0
        means[i] = mean
        stds[i] = math.sqrt(m2 / (count - 1)) if count > 1 else 0.0
    return means, stds


def window_stats_np(x, window):
    n = x.size
    means = np.empty(n)
    stds = np.zeros(n)
    head = min(n, window - 1)
    # partial windows at the start: prefix rows, NaN-padded
    if head:
        padded = np.concatenate([np.full(window - 1, np.nan), x[:head]])
        rows = sliding_window_view(padded, window)[:head]
        cnt = np.arange(1, head + 1, dtype=np.float64)
        mu = np.nansum(rows, axis=1) / cnt
        ss = np.nansum((rows - mu[:, None]) ** 2, axis=1)
        means[:head] = mu
        stds[1:head] = np.sqrt(ss[1:] / (cnt[1:] - 1.0))
    if n >= window:
        view = sliding_window_view(x, window)
        block = max(1, _BLOCK_ELEMS // window)
        for start in range(0, view.shape[0], block):
            rows = view[start : start + block]
            mu = rows.sum(axis=1) / window
            dev = rows - mu[:, None]
            out = slice(head + start, head + start + rows.shape[0])
            means[out] = mu
            if window > 1:
                stds[out] = np.sqrt(np.einsum("ij,ij->i", dev, dev) / (window - 1))
    return means, stds


# ------------------------------------------------------------- Kendall pairs


@njit
def kendall_pairs_nb(x, y):
    """Return (concordant - discordant, pairs tied in x, pairs tied in y)."""
    n = x.size
    s = 0
    tied_x = 0
    tied_y = 0
    for i in range(n):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dx = x[j] - xi
            dy = y[j] - yi
            if dx == 0.0:
                tied_x += 1
            if dy == 0.0:
                tied_y += 1
            if dx != 0.0 and dy != 0.0:
                if (dx > 0.0) == (dy > 0.0):
                    s += 1
                else:
                    s -= 1
    return s, tied_x, tied_y


def kendall_pairs_np(x, y):
    n = x.size
    s = 0
    tied_x = 0
    tied_y = 0
    block = max(1, _BLOCK_ELEMS // max(n, 1))
    cols = np.arange(n)
    for start in range(0, n, block):
        rows = np.arange(start, min(n, start + block))
        upper = cols[None, :] > rows[:, None]
        sx = np.sign(x[None, :] - x[rows, None])
        sy = np.sign(y[None, :] - y[rows, None])
        s += int(np.sum((sx * sy)[upper]))
        tied_x += int(np.count_nonzero((sx == 0) & upper))
        tied_y += int(np.count_nonzero((sy == 0) & upper))
    return s, tied_x, tied_y


# -------------------------------------------------------- generalized ESD core


@njit
def esd_extremes_nb(values, k):
    """Remove the most extreme point ``k`` times.

    Returns the removed indices and their studentized deviations. Stops early
    if the remaining points have zero spread.
    """
    n = values.size
    active = np.ones(n, dtype=np.bool_)
    idx = np.empty(k, dtype=np.int64)
    stat = np.empty(k)
    found = 0
    for j in range(k):
        m = n - j
        total = 0.0
        for i in range(n):
            if active[i]:
                total += values[i]
        mean = total / m
        ss = 0.0
        for i in range(n):
            if active[i]:
                d = values[i] - mean
                ss += d * d
        sd = math.sqrt(ss / (m - 1))
        if sd == 0.0:
            break
        best = -1
        best_dev = -1.0
        for i in range(n):
            if active[i]:
                dev = abs(values[i] - mean)
                if dev > best_dev:
                    best_dev = dev
                    best = i
        idx[j] = best
        stat[j] = best_dev / sd
        active[best] = False
        found += 1
    return idx[:found], stat[:found]


def esd_extremes_np(values, k):
    n = values.size
    active = np.ones(n, dtype=bool)
    idx = []
    stat = []
    for j in range(k):
        rest = values[active]
        mean = rest.mean()
        sd = rest.std(ddof=1)
        if sd == 0.0:
            break
        dev = np.where(active, np.abs(values - mean), -1.0)
        best = int(np.argmax(dev))
        idx.append(best)
        stat.append(dev[best] / sd)
        active[best] = False
    return np.asarray(idx, dtype=np.int64), np.asarray(stat, dtype=np.float64)


# ------------------------------------------------------ nearest-centroid pass


@njit
def assign_nb(points, centroids):
    n, dim = points.shape
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist2 = np.empty(n)
    for i in range(n):
        best = 0
        best_d = np.inf
        for c in range(k):
            acc = 0.0
            for t in range(dim):
                diff = points[i, t] - centroids[c, t]
                acc += diff * diff
            if acc < best_d:
                best_d = acc
                best = c
        labels[i] = best
        dist2[i] = best_d
    return labels, dist2


def assign_np(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    d2 = np.einsum("nkd,nkd->nk", diff, diff)
    labels = np.argmin(d2, axis=1).astype(np.int64)
    return labels, d2[np.arange(points.shape[0]), labels]


# ------------------------------------------------- two-tailed normal tail mass


@njit
def normal_tail_nb(z, mu, sigma):
    out = np.empty(z.size)
    scale = sigma * _SQRT2
    for i in range(z.size):
        out[i] = math.erfc(abs(z[i] - mu) / scale)
    return out


_erfc_ufunc = np.frompyfunc(math.erfc, 1, 1)


def normal_tail_np(z, mu, sigma):
    return _erfc_ufunc(np.abs(z - mu) / (sigma * _SQRT2)).astype(np.float64)


# ---------------------------------------------------------------- dispatch

if USE_NUMBA:
    sliding_mean = sliding_mean_nb
    window_stats = window_stats_nb
    kendall_pairs = kendall_pairs_nb
    esd_extremes = esd_extremes_nb
    assign = assign_nb
    normal_tail = normal_tail_nb
else:
    sliding_mean = sliding_mean_np
    window_stats = window_stats_np
    kendall_pairs = kendall_pairs_np
    esd_extremes = esd_extremes_np
    assign = assign_np
    normal_tail = normal_tail_np

PAIRS = {
    "sliding_mean": (sliding_mean_nb, sliding_mean_np),
    "window_stats": (window_stats_nb, window_stats_np),
    "kendall_pairs": (kendall_pairs_nb, kendall_pairs_np),
    "esd_extremes": (esd_extremes_nb, esd_extremes_np),
    "assign": (assign_nb, assign_np),
    "normal_tail": (normal_tail_nb, normal_tail_np),
}
