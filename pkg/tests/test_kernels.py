"""Numeric kernels against brute-force oracles, plus numba/numpy parity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivecast import _kernels


def brute_sq_distances(points, x):
    out = np.empty(len(points))
    for i, p in enumerate(points):
        acc = 0.0
        for a, b in zip(p, x):
            acc += (a - b) ** 2
        out[i] = acc
    return out


def brute_split_gains(samples_per_bin):
    """Best normalized variance reduction from raw per-bin sample lists.

    Variances use the n-denominator so the oracle matches sufficient
    statistics computed as E[y^2] - E[y]^2.
    """
    nonempty = [np.asarray(s, dtype=float) for s in samples_per_bin if len(s)]
    if not nonempty:
        return 0.0, -1
    everything = np.concatenate(nonempty)
    if len(everything) < 2:
        return 0.0, -1
    var = np.var(everything)
    if var <= 1e-12:
        return 0.0, -1
    best_gain, best_bin = 0.0, -1
    for b in range(len(samples_per_bin) - 1):
        left = np.concatenate([s for s in samples_per_bin[: b + 1] if len(s)] or [np.empty(0)])
        right = np.concatenate([s for s in samples_per_bin[b + 1:] if len(s)] or [np.empty(0)])
        if len(left) < 1 or len(right) < 1:
            continue
        child = (len(left) * np.var(left) + len(right) * np.var(right)) / len(everything)
        gain = (var - child) / var
        if gain > best_gain:
            best_gain, best_bin = gain, b
    return best_gain, best_bin


def bins_to_stats(samples_per_bin):
    n_bins = len(samples_per_bin)
    counts = np.zeros((1, n_bins))
    sums = np.zeros((1, n_bins))
    sumsqs = np.zeros((1, n_bins))
    for b, s in enumerate(samples_per_bin):
        s = np.asarray(s, dtype=float)
        counts[0, b] = len(s)
        sums[0, b] = s.sum()
        sumsqs[0, b] = (s ** 2).sum()
    return counts, sums, sumsqs


class TestSqDistances:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            points = rng.normal(size=(50, 7))
            x = rng.normal(size=7)
            np.testing.assert_allclose(
                _kernels.sq_distances(points, x),
                brute_sq_distances(points, x),
                rtol=1e-12, atol=1e-12,
            )

    def test_zero_for_identical_point(self):
        points = np.array([[1.0, 2.0], [3.0, 4.0]])
        d = _kernels.sq_distances(points, np.array([3.0, 4.0]))
        assert d[1] == 0.0 and d[0] > 0.0

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        points = rng.normal(size=(8, 3)) * 10
        x = rng.normal(size=3)
        assert (_kernels.sq_distances(points, x) >= 0.0).all()


class TestSplitGains:
    def test_matches_brute_force_random(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n_bins = int(rng.integers(2, 12))
            samples = [rng.normal(loc=rng.normal() * 3, size=rng.integers(0, 15))
                       for _ in range(n_bins)]
            counts, sums, sumsqs = bins_to_stats(samples)
            gain, bin_ = _kernels.split_gains(counts, sums, sumsqs)
            want_gain, want_bin = brute_split_gains(samples)
            assert bin_[0] == want_bin
            np.testing.assert_allclose(gain[0], want_gain, rtol=1e-9, atol=1e-9)

    def test_perfect_split_two_clusters(self):
        # bins 0-4 hold value 0, bins 5-9 hold value 10: cutting at bin 4
        # removes all variance
        samples = [[0.0] * 5 for _ in range(5)] + [[10.0] * 5 for _ in range(5)]
        counts, sums, sumsqs = bins_to_stats(samples)
        gain, bin_ = _kernels.split_gains(counts, sums, sumsqs)
        assert bin_[0] == 4
        assert gain[0] == pytest.approx(1.0)

    def test_constant_target_no_split(self):
        samples = [[5.0, 5.0], [5.0, 5.0], [5.0]]
        counts, sums, sumsqs = bins_to_stats(samples)
        gain, bin_ = _kernels.split_gains(counts, sums, sumsqs)
        assert bin_[0] == -1 and gain[0] == 0.0

    def test_single_observation_no_split(self):
        counts, sums, sumsqs = bins_to_stats([[3.0], [], []])
        gain, bin_ = _kernels.split_gains(counts, sums, sumsqs)
        assert bin_[0] == -1

    def test_multiple_features_independent(self):
        rng = np.random.default_rng(2)
        per_feature = [
            [rng.normal(size=5).tolist() for _ in range(6)],
            [[0.0] * 3, [0.0] * 3, [9.0] * 3, [9.0] * 3, [], []],
        ]
        stats = [bins_to_stats(s) for s in per_feature]
        counts = np.vstack([s[0] for s in stats])
        sums = np.vstack([s[1] for s in stats])
        sumsqs = np.vstack([s[2] for s in stats])
        gain, bin_ = _kernels.split_gains(counts, sums, sumsqs)
        for f in range(2):
            want_gain, want_bin = brute_split_gains(per_feature[f])
            assert bin_[f] == want_bin
            np.testing.assert_allclose(gain[f], want_gain, rtol=1e-9, atol=1e-9)
        assert bin_[1] == 1 and gain[1] == pytest.approx(1.0)


def brute_adwin_cut(counts, sums, sumsqs, delta):
    import math
    rows = len(counts)
    n = float(sum(counts))
    if rows < 2 or n < 2:
        return -1
    mean = sum(sums) / n
    var = max(sum(sumsqs) / n - mean * mean, 0.0)
    dd = math.log(2.0 * math.log(n) / delta)
    n0 = s0 = 0.0
    for r in range(rows - 1):
        n0 += counts[r]
        s0 += sums[r]
        n1, s1 = n - n0, sum(sums) - s0
        if n0 < 5 or n1 < 5:
            continue
        minv = 1.0 / n0 + 1.0 / n1
        eps = math.sqrt(2.0 * minv * var * dd) + (2.0 / 3.0) * dd * minv
        if abs(s0 / n0 - s1 / n1) > eps:
            return r
    return -1


class TestAdwinCut:
    @staticmethod
    def bucketize(values, size=4):
        values = np.asarray(values, dtype=float)
        k = len(values) // size
        chunks = np.split(values[: k * size], k) if k else []
        counts = np.array([float(size)] * k)
        sums = np.array([c.sum() for c in chunks])
        sumsqs = np.array([(c ** 2).sum() for c in chunks])
        return counts, sums, sumsqs

    def test_matches_brute_force_random(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            values = rng.normal(size=int(rng.integers(8, 200)))
            if rng.random() < 0.5:
                values[len(values) // 2:] += rng.normal() * 4
            counts, sums, sumsqs = self.bucketize(values)
            if len(counts) < 2:
                continue
            got = _kernels.adwin_cut(counts, sums, sumsqs, 0.002)
            want = brute_adwin_cut(counts, sums, sumsqs, 0.002)
            assert got == want

    def test_detects_large_shift(self):
        rng = np.random.default_rng(4)
        values = np.concatenate([rng.normal(0, 0.3, 200), rng.normal(8, 0.3, 200)])
        counts, sums, sumsqs = self.bucketize(values)
        assert _kernels.adwin_cut(counts, sums, sumsqs, 0.002) >= 0

    def test_no_cut_on_stationary(self):
        rng = np.random.default_rng(5)
        values = rng.normal(2.0, 1.0, 400)
        counts, sums, sumsqs = self.bucketize(values)
        assert _kernels.adwin_cut(counts, sums, sumsqs, 0.002) == -1

    def test_tiny_windows_never_cut(self):
        counts = np.array([2.0, 2.0])
        sums = np.array([0.0, 200.0])
        sumsqs = np.array([0.0, 20000.0])
        assert _kernels.adwin_cut(counts, sums, sumsqs, 0.002) == -1


@pytest.mark.skipif(not _kernels.NUMBA_ACTIVE, reason="numba path not active")
class TestNumbaParity:
    """Compiled kernels must agree with the numpy fallbacks bit-for-bit
    on well-conditioned inputs."""

    def test_sq_distances(self):
        rng = np.random.default_rng(6)
        points = rng.normal(size=(64, 9))
        x = rng.normal(size=9)
        np.testing.assert_allclose(
            _kernels._sq_distances_nb(points, x),
            _kernels._sq_distances_np(points, x),
            rtol=1e-12,
        )

    def test_split_gains(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            counts = rng.integers(0, 9, size=(5, 10)).astype(float)
            centers = rng.normal(size=(5, 10)) * 2
            sums = counts * centers
            sumsqs = counts * (centers ** 2 + rng.random(size=(5, 10)))
            g_nb, b_nb = _kernels._split_gains_nb(counts, sums, sumsqs)
            g_np, b_np = _kernels._split_gains_np(counts, sums, sumsqs)
            np.testing.assert_allclose(g_nb, g_np, rtol=1e-10, atol=1e-12)
            np.testing.assert_array_equal(b_nb, b_np)

    def test_adwin_cut(self):
        rng = np.random.default_rng(8)
        for _ in range(40):
            rows = int(rng.integers(2, 30))
            counts = rng.integers(1, 9, size=rows).astype(float)
            means = rng.normal(size=rows) * (3 if rng.random() < 0.5 else 0.2)
            sums = counts * means
            sumsqs = counts * (means ** 2 + 0.5)
            assert (_kernels._adwin_cut_nb(counts, sums, sumsqs, 0.002)
                    == _kernels._adwin_cut_np(counts, sums, sumsqs, 0.002))
