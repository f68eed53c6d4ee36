"""Incremental regression trees and a drift-adaptive bagged forest.

Trees grow one observation at a time.  Each leaf keeps equal-width
histogram statistics of the target per feature and converts a leaf into a
binary split only when a Hoeffding-style confidence bound says the best
candidate beats the runner-up with high probability, so the tree built
online converges to the one a batch learner would pick.  Leaves also keep
a quantile sketch of their targets, which is what interval predictions
are read from.

The forest combines such trees with Poisson online bagging and random
feature subspaces.  Every tree is paired with two adaptive windows fed
its absolute error: a sensitive one that starts a background replacement
tree on warning, and a conservative one that swaps the replacement in on
confirmed drift.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .exceptions import InsufficientHistoryError
from .streaming import AdwinWindow, KllSketch


def hoeffding_bound(value_range: float, delta: float, n: float) -> float:
    """Deviation bound for a mean of n observations in [0, value_range]."""
    return math.sqrt(value_range * value_range * math.log(1.0 / delta)
                     / (2.0 * n))


class _Leaf:
    __slots__ = ("counts", "sums", "sumsqs", "fmin", "fmax", "n", "total",
                 "sketch", "since_attempt", "depth")

    def __init__(self, n_features: int, n_bins: int, sketch_k: int,
                 sketch_seed: int, depth: int):
        self.counts = np.zeros((n_features, n_bins))
        self.sums = np.zeros((n_features, n_bins))
        self.sumsqs = np.zeros((n_features, n_bins))
        self.fmin = np.full(n_features, np.inf)
        self.fmax = np.full(n_features, -np.inf)
        self.n = 0.0
        self.total = 0.0
        self.sketch = KllSketch(sketch_k, seed=sketch_seed)
        self.since_attempt = 0.0
        self.depth = depth

    def mean(self) -> float:
        return self.total / self.n if self.n > 0 else 0.0

    def bin_of(self, x: np.ndarray) -> np.ndarray:
        span = self.fmax - self.fmin
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.where(span > 0, (x - self.fmin) / np.where(span > 0, span, 1.0), 0.0)
        n_bins = self.counts.shape[1]
        return np.clip((raw * n_bins).astype(np.int64), 0, n_bins - 1)

    def learn(self, x: np.ndarray, y: float, weight: float) -> None:
        np.minimum(self.fmin, x, out=self.fmin)
        np.maximum(self.fmax, x, out=self.fmax)
        bins = self.bin_of(x)
        rows = np.arange(len(x))
        self.counts[rows, bins] += weight
        self.sums[rows, bins] += weight * y
        self.sumsqs[rows, bins] += weight * y * y
        self.n += weight
        self.total += weight * y
        for _ in range(int(round(weight))):
            self.sketch.insert(y)
        self.since_attempt += weight


class _Node:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature: int, threshold: float, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class HoeffdingTree:
    """Single incremental regression tree with histogram-based splits."""

    def __init__(self, n_features: int, seed: int = 0, grace_period: int = 50,
                 delta_split: float = 1e-5, tie_tau: float = 0.05,
                 n_bins: int = 10, max_depth: int = 12,
                 subspace: int | None = None, sketch_k: int = 64):
        if n_features < 1:
            raise ValueError("need at least one feature")
        self.n_features = n_features
        self.grace_period = grace_period
        self.delta_split = delta_split
        self.tie_tau = tie_tau
        self.n_bins = n_bins
        self.max_depth = max_depth
        self.subspace = subspace or max(1, math.ceil(math.sqrt(n_features)))
        self.sketch_k = sketch_k
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self.root = self._new_leaf(depth=0)
        self.n_seen = 0.0
        self.total = 0.0
        self.n_splits = 0

    def _new_leaf(self, depth: int) -> _Leaf:
        seed = int(self._rng.integers(0, 2 ** 31 - 1))
        return _Leaf(self.n_features, self.n_bins, self.sketch_k, seed, depth)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(
                f"expected {self.n_features} features, got shape {x.shape}")
        return x

    def _descend(self, x: np.ndarray):
        """Leaf for x plus the parent link needed to replace it."""
        node, parent, side = self.root, None, ""
        while isinstance(node, _Node):
            parent = node
            side = "left" if x[node.feature] <= node.threshold else "right"
            node = getattr(node, side)
        return node, parent, side

    def predict_one(self, x) -> float:
        x = self._check(x)
        leaf, _, _ = self._descend(x)
        if leaf.n > 0:
            return leaf.mean()
        if self.n_seen > 0:
            return self.total / self.n_seen
        return 0.0

    def leaf_sketch(self, x) -> KllSketch:
        leaf, _, _ = self._descend(self._check(x))
        return leaf.sketch

    def learn_one(self, x, y: float, weight: float = 1.0) -> None:
        x = self._check(x)
        y = float(y)
        leaf, parent, side = self._descend(x)
        leaf.learn(x, y, weight)
        self.n_seen += weight
        self.total += weight * y
        if leaf.since_attempt >= self.grace_period:
            leaf.since_attempt = 0.0
            self._attempt_split(leaf, parent, side)

    def _attempt_split(self, leaf: _Leaf, parent, side: str) -> None:
        if leaf.depth >= self.max_depth or leaf.n < 2:
            return
        m = min(self.subspace, self.n_features)
        sel = self._rng.choice(self.n_features, size=m, replace=False)
        gains, bins = _kernels.split_gains(
            leaf.counts[sel], leaf.sums[sel], leaf.sumsqs[sel])
        order = np.argsort(gains, kind="stable")[::-1]
        best = int(order[0])
        best_gain = float(gains[best])
        if best_gain <= 0.0 or bins[best] < 0:
            return
        second_gain = float(gains[int(order[1])]) if m > 1 else 0.0
        eps = hoeffding_bound(1.0, self.delta_split, leaf.n)
        if not (best_gain - second_gain > eps or eps < self.tie_tau):
            return

        feature = int(sel[best])
        lo, hi = leaf.fmin[feature], leaf.fmax[feature]
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            return
        threshold = lo + (int(bins[best]) + 1) * (hi - lo) / self.n_bins
        if not lo < threshold < hi:
            return

        node = _Node(feature, threshold,
                     self._new_leaf(leaf.depth + 1),
                     self._new_leaf(leaf.depth + 1))
        if parent is None:
            self.root = node
        else:
            setattr(parent, side, node)
        self.n_splits += 1

    # -- introspection --------------------------------------------------

    def _walk(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, _Node):
                stack.extend((node.left, node.right))

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self._walk() if isinstance(n, _Leaf))

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self._walk())

    @property
    def depth(self) -> int:
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            if isinstance(node, _Node):
                stack.extend(((node.left, d + 1), (node.right, d + 1)))
            else:
                best = max(best, d)
        return best


class AdaptiveForest:
    """Poisson-bagged ensemble of Hoeffding trees with drift recovery.

    Each observation trains every tree with an independent Poisson
    weight.  Every tree's absolute error stream feeds two adaptive
    windows: a warning window (larger delta, trips early) that starts a
    background tree trained in parallel, and a drift window that replaces
    the tree with its background (or a fresh one) when the error
    distribution has demonstrably shifted.  ``disable_drift`` turns all
    of that off, leaving plain online bagging.
    """

    def __init__(self, n_features: int, n_trees: int = 10, seed: int = 0,
                 lambda_bag: float = 6.0, grace_period: int = 50,
                 delta_split: float = 1e-5, tie_tau: float = 0.05,
                 n_bins: int = 10, max_depth: int = 12,
                 subspace: int | None = None, sketch_k: int = 64,
                 warn_delta: float = 0.01, drift_delta: float = 0.002,
                 disable_drift: bool = False):
        if n_trees < 1:
            raise ValueError("need at least one tree")
        self.n_features = n_features
        self.n_trees = n_trees
        self.lambda_bag = lambda_bag
        self.warn_delta = warn_delta
        self.drift_delta = drift_delta
        self.disable_drift = disable_drift
        self._tree_kw = dict(
            grace_period=grace_period, delta_split=delta_split,
            tie_tau=tie_tau, n_bins=n_bins, max_depth=max_depth,
            subspace=subspace, sketch_k=sketch_k)

        ss = np.random.SeedSequence(seed)
        bag_ss, spawn_ss, *tree_ss = ss.spawn(n_trees + 2)
        self._bag_rng = np.random.Generator(np.random.PCG64(bag_ss))
        self._spawn_rng = np.random.Generator(np.random.PCG64(spawn_ss))
        self.trees = [self._new_tree(s) for s in tree_ss]
        self._warn = [AdwinWindow(warn_delta) for _ in range(n_trees)]
        self._drift = [AdwinWindow(drift_delta) for _ in range(n_trees)]
        self.background: list[HoeffdingTree | None] = [None] * n_trees
        self.n_seen = 0
        self.n_replacements = 0
        self.n_warnings = 0

    def _new_tree(self, seed_source=None) -> HoeffdingTree:
        if seed_source is None:
            seed = int(self._spawn_rng.integers(0, 2 ** 31 - 1))
        else:
            seed = int(seed_source.generate_state(1)[0] & 0x7FFFFFFF)
        return HoeffdingTree(self.n_features, seed=seed, **self._tree_kw)

    def predict_one(self, x) -> float:
        return float(np.mean([t.predict_one(x) for t in self.trees]))

    def learn_one(self, x, y: float) -> None:
        y = float(y)
        weights = self._bag_rng.poisson(self.lambda_bag, self.n_trees)
        for i, tree in enumerate(self.trees):
            err = abs(y - tree.predict_one(x))
            if not self.disable_drift:
                warned = self._warn[i].update(err)
                drifted = self._drift[i].update(err)
                if drifted:
                    replacement = self.background[i]
                    self.trees[i] = (replacement if replacement is not None
                                     else self._new_tree())
                    tree = self.trees[i]
                    self.background[i] = None
                    self._warn[i] = AdwinWindow(self.warn_delta)
                    self._drift[i] = AdwinWindow(self.drift_delta)
                    self.n_replacements += 1
                elif warned and self.background[i] is None:
                    self.background[i] = self._new_tree()
                    self.n_warnings += 1
            w = float(weights[i])
            if w > 0:
                tree.learn_one(x, y, w)
                if self.background[i] is not None:
                    self.background[i].learn_one(x, y, w)
        self.n_seen += 1

    # -- interval support ------------------------------------------------

    def merged_sketch(self, x) -> KllSketch:
        """Union sketch of the targets in every tree's routed leaf."""
        merged: KllSketch | None = None
        for tree in self.trees:
            sk = tree.leaf_sketch(x)
            if sk.n == 0:
                continue
            merged = sk if merged is None else KllSketch.merge(merged, sk)
        if merged is None:
            raise InsufficientHistoryError("no populated leaves for this input")
        return merged

    def quantile(self, x, q: float) -> float:
        return self.merged_sketch(x).quantile(q)
