"""Hot numeric kernels, with numba-compiled and pure-numpy twins.

The numba path is selected when numba imports cleanly and the environment
variable ``DRIVECAST_NUMBA`` is unset or truthy; set ``DRIVECAST_NUMBA=0``
to force the numpy fallbacks.  Both paths implement the same arithmetic;
``benchmarks/bench_kernels.py`` compares their throughput.

Kernels here are the per-observation inner loops that dominate long runs:
the sliding-window KNN distance scan, the per-leaf split-gain scan of the
incremental trees, and the adaptive-window cut scan of the drift detector.
"""

from __future__ import annotations

import os

import numpy as np

# Sub-windows shorter than this are never considered by the cut scan;
# keeps false positives down on freshly started windows.
_ADWIN_MIN_SUBWINDOW = 5.0


def _sq_distances_np(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    diff = points - x
    return np.einsum("ij,ij->i", diff, diff)


def _split_gains_np(counts: np.ndarray, sums: np.ndarray, sumsqs: np.ndarray):
    """Best normalized variance reduction per feature over bin boundaries.

    counts/sums/sumsqs hold per-(feature, bin) target statistics.  Returns
    (best_gain, best_bin) arrays of length n_features; best_bin is -1 where
    no valid boundary exists.  Gains are (parent_var - weighted_child_var)
    normalized by parent_var, so they live in [0, 1].
    """
    n = counts.sum(axis=1)
    s = sums.sum(axis=1)
    q = sumsqs.sum(axis=1)

    n_feat, n_bins = counts.shape
    best_gain = np.zeros(n_feat)
    best_bin = np.full(n_feat, -1, dtype=np.int64)

    valid_parent = n >= 2.0
    if not valid_parent.any():
        return best_gain, best_bin
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(n > 0, s / np.maximum(n, 1.0), 0.0)
        var = np.where(n > 0, q / np.maximum(n, 1.0) - mu * mu, 0.0)

    n0 = np.cumsum(counts[:, :-1], axis=1)
    s0 = np.cumsum(sums[:, :-1], axis=1)
    q0 = np.cumsum(sumsqs[:, :-1], axis=1)
    n1 = n[:, None] - n0
    s1 = s[:, None] - s0
    q1 = q[:, None] - q0

    ok = (n0 >= 1.0) & (n1 >= 1.0) & valid_parent[:, None] & (var[:, None] > 1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        m0 = s0 / np.maximum(n0, 1.0)
        m1 = s1 / np.maximum(n1, 1.0)
        v0 = np.maximum(q0 / np.maximum(n0, 1.0) - m0 * m0, 0.0)
        v1 = np.maximum(q1 / np.maximum(n1, 1.0) - m1 * m1, 0.0)
        child = (n0 * v0 + n1 * v1) / np.maximum(n[:, None], 1.0)
        red = (var[:, None] - child) / np.where(var[:, None] > 1e-12, var[:, None], 1.0)
    red = np.where(ok, red, -1.0)

    idx = np.argmax(red, axis=1)
    gain = red[np.arange(n_feat), idx]
    found = gain > 0.0
    best_gain[found] = gain[found]
    best_bin[found] = idx[found]
    return best_gain, best_bin


def _adwin_cut_np(counts: np.ndarray, sums: np.ndarray, sumsqs: np.ndarray,
                  delta: float) -> int:
    """First bucket index (oldest side) where the two sub-windows differ.

    Buckets are ordered oldest to newest.  Returns -1 when no cut point
    satisfies the variance-aware Hoeffding-style bound at confidence delta.
    """
    rows = counts.shape[0]
    if rows < 2:
        return -1
    n = counts.sum()
    if n < 2.0:
        return -1
    mean = sums.sum() / n
    var = max(sumsqs.sum() / n - mean * mean, 0.0)
    dd = np.log(2.0 * np.log(n) / delta)

    n0 = np.cumsum(counts[:-1])
    s0 = np.cumsum(sums[:-1])
    n1 = n - n0
    s1 = sums.sum() - s0
    ok = (n0 >= _ADWIN_MIN_SUBWINDOW) & (n1 >= _ADWIN_MIN_SUBWINDOW)
    if not ok.any():
        return -1
    minv = 1.0 / n0 + 1.0 / n1
    eps = np.sqrt(2.0 * minv * var * dd) + (2.0 / 3.0) * dd * minv
    diff = np.abs(s0 / n0 - s1 / n1)
    hit = ok & (diff > eps)
    if not hit.any():
        return -1
    return int(np.argmax(hit))


_env = os.environ.get("DRIVECAST_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _env not in {"0", "false", "no", "off"}
NUMBA_ACTIVE = False

if NUMBA_REQUESTED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass
    else:
        @njit(cache=True)
        def _sq_distances_nb(points, x):  # pragma: no cover - compiled
            n, d = points.shape
            out = np.empty(n)
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    diff = points[i, j] - x[j]
                    acc += diff * diff
                out[i] = acc
            return out

        @njit(cache=True)
        def _split_gains_nb(counts, sums, sumsqs):  # pragma: no cover
            n_feat, n_bins = counts.shape
            best_gain = np.zeros(n_feat)
            best_bin = np.full(n_feat, -1, np.int64)
            for f in range(n_feat):
                n = 0.0
                s = 0.0
                q = 0.0
                for b in range(n_bins):
                    n += counts[f, b]
                    s += sums[f, b]
                    q += sumsqs[f, b]
                if n < 2.0:
                    continue
                mu = s / n
                var = q / n - mu * mu
                if var <= 1e-12:
                    continue
                n0 = 0.0
                s0 = 0.0
                q0 = 0.0
                for b in range(n_bins - 1):
                    n0 += counts[f, b]
                    s0 += sums[f, b]
                    q0 += sumsqs[f, b]
                    n1 = n - n0
                    if n0 < 1.0 or n1 < 1.0:
                        continue
                    m0 = s0 / n0
                    m1 = (s - s0) / n1
                    v0 = q0 / n0 - m0 * m0
                    v1 = (q - q0) / n1 - m1 * m1
                    if v0 < 0.0:
                        v0 = 0.0
                    if v1 < 0.0:
                        v1 = 0.0
                    red = (var - (n0 * v0 + n1 * v1) / n) / var
                    if red > best_gain[f]:
                        best_gain[f] = red
                        best_bin[f] = b
            return best_gain, best_bin

        @njit(cache=True)
        def _adwin_cut_nb(counts, sums, sumsqs, delta):  # pragma: no cover
            rows = counts.shape[0]
            if rows < 2:
                return -1
            n = 0.0
            s = 0.0
            q = 0.0
            for r in range(rows):
                n += counts[r]
                s += sums[r]
                q += sumsqs[r]
            if n < 2.0:
                return -1
            mean = s / n
            var = q / n - mean * mean
            if var < 0.0:
                var = 0.0
            dd = np.log(2.0 * np.log(n) / delta)
            n0 = 0.0
            s0 = 0.0
            for r in range(rows - 1):
                n0 += counts[r]
                s0 += sums[r]
                n1 = n - n0
                if n0 < _ADWIN_MIN_SUBWINDOW or n1 < _ADWIN_MIN_SUBWINDOW:
                    continue
                minv = 1.0 / n0 + 1.0 / n1
                eps = np.sqrt(2.0 * minv * var * dd) + (2.0 / 3.0) * dd * minv
                diff = s0 / n0 - (s - s0) / n1
                if diff < 0.0:
                    diff = -diff
                if diff > eps:
                    return r
            return -1

        NUMBA_ACTIVE = True

if NUMBA_ACTIVE:
    sq_distances = _sq_distances_nb
    split_gains = _split_gains_nb
    adwin_cut = _adwin_cut_nb
else:
    sq_distances = _sq_distances_np
    split_gains = _split_gains_np
    adwin_cut = _adwin_cut_np
