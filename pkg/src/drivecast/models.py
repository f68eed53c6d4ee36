"""Online predictors with calibrated prediction intervals.

Five model families share one contract: ``predict_interval(x)`` returns a
point estimate with a central interval at the configured confidence
before the truth is known, then ``learn_one(x, y)`` folds the truth in.
All state updates are constant-time and constant-memory per observation.

* ``mean``: running mean and std of the target, features ignored.  The
  floor every other model must beat.
* ``qr``: three linear heads trained by stochastic gradient descent on
  the tilted absolute (pinball) loss for the lower, median, and upper
  quantiles.
* ``qknn``: nearest neighbors within a sliding window; the interval is
  read from the empirical quantiles of the neighbor targets.
* ``qarf``: drift-adaptive forest of incremental trees; the interval is
  read from merged per-leaf quantile sketches.
* ``mcnn``: small feed-forward net whose predictive spread combines
  dropout-sampling variance (model uncertainty) with a running residual
  variance (noise), assuming a Gaussian predictive distribution.

Models that are scale-sensitive (``qr``, ``mcnn``) standardize the
target internally with running statistics; neighbor and tree models work
in natural units because their predictions are order statistics of
actually observed targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import DivergenceError, InsufficientHistoryError
from .forest import AdaptiveForest
from .streaming import KllSketch

MODEL_KINDS = ("mean", "qr", "qknn", "qarf", "mcnn")

# Two-sided 90% Gaussian quantile, pinned so intervals are reproducible
# to the digit across platforms.
Z90 = 1.6449

CHECKPOINT_FORMAT_VERSION = 1


def _norm_ppf(p: float) -> float:
    """Inverse standard normal CDF (Acklam's rational approximation)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    if p > 1.0 - p_low:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                 / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))


def z_for_confidence(confidence: float) -> float:
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    if abs(confidence - 0.90) < 1e-12:
        return Z90
    return _norm_ppf(0.5 + confidence / 2.0)


@dataclass
class PredictionInterval:
    point: float
    lower: float
    upper: float
    sigma: float | None = None

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y: float) -> bool:
        return self.lower <= y <= self.upper


class _Welford:
    __slots__ = ("count", "mean", "m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, v: float) -> None:
        self.count += 1
        delta = v - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (v - self.mean)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(max(self.m2 / (self.count - 1), 0.0))

    def to_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "m2": self.m2}

    @classmethod
    def from_dict(cls, d: dict) -> "_Welford":
        out = cls()
        out.count, out.mean, out.m2 = d["count"], d["mean"], d["m2"]
        return out


class _TargetScaler(_Welford):
    """Running standardization of the target.  ``transform`` always uses
    the statistics accumulated before the current observation."""

    @property
    def scale(self) -> float:
        s = self.std
        return s if self.count >= 2 and s > 1e-9 else 1.0

    def transform(self, y: float) -> float:
        return (y - self.mean) / self.scale

    def inverse(self, z: float) -> float:
        return z * self.scale + self.mean

    def inverse_spread(self, s: float) -> float:
        return s * self.scale


class OnlineModel:
    """Shared contract; subclasses fill in the four core methods."""

    kind = "base"

    def __init__(self, n_features: int, seed: int = 0,
                 confidence: float = 0.90):
        if n_features < 0:
            raise ValueError("n_features must be >= 0")
        self.n_features = n_features
        self.seed = int(seed)
        self.confidence = float(confidence)
        self.z = z_for_confidence(self.confidence)
        self.n_seen = 0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(
                f"expected {self.n_features} features, got shape {x.shape}")
        if not np.isfinite(x).all():
            raise ValueError("features must be finite")
        return x

    def predict_one(self, x) -> float:
        raise NotImplementedError

    def predict_interval(self, x) -> PredictionInterval:
        raise NotImplementedError

    def learn_one(self, x, y: float) -> None:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _base_dict(self) -> dict:
        return {
            "version": CHECKPOINT_FORMAT_VERSION,
            "kind": self.kind,
            "n_features": self.n_features,
            "seed": self.seed,
            "confidence": self.confidence,
            "n_seen": self.n_seen,
        }


class MeanBaseline(OnlineModel):
    """Running mean with a Gaussian interval.  Ignores features."""

    kind = "mean"

    def __init__(self, n_features: int, seed: int = 0,
                 confidence: float = 0.90):
        super().__init__(n_features, seed, confidence)
        self._stats = _Welford()

    def predict_one(self, x) -> float:
        self._check(x)
        return self._stats.mean

    def predict_interval(self, x) -> PredictionInterval:
        point = self.predict_one(x)
        if self._stats.count < 2:
            raise InsufficientHistoryError("need two observations for a spread")
        sigma = self._stats.std
        return PredictionInterval(point, point - self.z * sigma,
                                  point + self.z * sigma, sigma)

    def learn_one(self, x, y: float) -> None:
        self._check(x)
        self._stats.update(float(y))
        self.n_seen += 1

    def to_dict(self) -> dict:
        return {**self._base_dict(), "stats": self._stats.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "MeanBaseline":
        out = cls(d["n_features"], d["seed"], d["confidence"])
        out._stats = _Welford.from_dict(d["stats"])
        out.n_seen = d["n_seen"]
        return out


class QuantileRegressor(OnlineModel):
    """Linear quantile heads trained online with the pinball loss.

    Each head h with quantile level tau follows the subgradient

        dL/dtheta = -tau * x        if y >= theta . x
                    (1 - tau) * x   otherwise

    plus an L2 term.  Targets are standardized with running statistics;
    the interval is the lower/upper heads clamped around the median so
    crossing heads can never invert it.
    """

    kind = "qr"

    def __init__(self, n_features: int, seed: int = 0,
                 confidence: float = 0.90, lr: float | None = None,
                 l2: float = 1e-4, lr_decay: float = 0.01):
        super().__init__(n_features, seed, confidence)
        if lr is None:
            # step size that keeps the heads stable regardless of how
            # many standardized columns feed them
            lr = 0.1 / math.sqrt(n_features + 1)
        if lr <= 0:
            raise ValueError("lr must be positive")
        self.lr = float(lr)
        self.l2 = float(l2)
        self.lr_decay = float(lr_decay)
        alpha = (1.0 - self.confidence) / 2.0
        self.taus = (alpha, 0.5, 1.0 - alpha)
        self.thetas = np.zeros((3, n_features + 1))
        # targets arrive standardized, so the normal quantile is the
        # right starting intercept for each head; without it the tail
        # heads spend hundreds of steps just walking out to +-z
        self.thetas[0, -1] = -self.z
        self.thetas[2, -1] = self.z
        self._scaler = _TargetScaler()

    def _augment(self, x: np.ndarray) -> np.ndarray:
        return np.append(x, 1.0)

    def _heads(self, x: np.ndarray) -> np.ndarray:
        return self.thetas @ self._augment(x)

    def predict_one(self, x) -> float:
        x = self._check(x)
        return self._scaler.inverse(float(self._heads(x)[1]))

    def predict_interval(self, x) -> PredictionInterval:
        x = self._check(x)
        if self.n_seen < 2:
            raise InsufficientHistoryError("heads are still at their origin")
        lo_z, mid_z, hi_z = self._heads(x)
        point = self._scaler.inverse(float(mid_z))
        lower = min(self._scaler.inverse(float(lo_z)), point)
        upper = max(self._scaler.inverse(float(hi_z)), point)
        return PredictionInterval(point, lower, upper, None)

    def learn_one(self, x, y: float) -> None:
        x = self._check(x)
        y_z = self._scaler.transform(float(y))
        xa = self._augment(x)
        preds = self.thetas @ xa
        step = self.lr / (1.0 + self.lr_decay * self.n_seen)
        with np.errstate(over="ignore", invalid="ignore"):
            for h, tau in enumerate(self.taus):
                grad = -tau * xa if y_z >= preds[h] else (1.0 - tau) * xa
                self.thetas[h] -= step * (grad + 2.0 * self.l2 * self.thetas[h])
        if not np.isfinite(self.thetas).all():
            raise DivergenceError("quantile heads left the finite range")
        self._scaler.update(float(y))
        self.n_seen += 1

    def to_dict(self) -> dict:
        return {
            **self._base_dict(),
            "lr": self.lr, "l2": self.l2, "lr_decay": self.lr_decay,
            "thetas": self.thetas.tolist(),
            "scaler": self._scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileRegressor":
        out = cls(d["n_features"], d["seed"], d["confidence"],
                  lr=d["lr"], l2=d["l2"], lr_decay=d["lr_decay"])
        out.thetas = np.asarray(d["thetas"])
        out._scaler = _TargetScaler.from_dict(d["scaler"])
        out.n_seen = d["n_seen"]
        return out


class QuantileKnn(OnlineModel):
    """Sliding-window nearest neighbors with order-statistic intervals.

    Keeps the last ``window`` observations.  The point prediction is the
    mean of the k nearest targets; the interval bounds are empirical
    quantiles of those targets.  Distance ties break toward the earlier
    insertion, so predictions are exactly reproducible.
    """

    kind = "qknn"

    def __init__(self, n_features: int, seed: int = 0,
                 confidence: float = 0.90, k: int = 20, window: int = 365,
                 min_neighbors: int = 5):
        super().__init__(n_features, seed, confidence)
        if k < 1 or window < 1:
            raise ValueError("k and window must be positive")
        if min_neighbors < 1:
            raise ValueError("min_neighbors must be positive")
        self.k = int(k)
        self.window = int(window)
        self.min_neighbors = int(min_neighbors)
        self._xs = np.zeros((self.window, n_features))
        self._ys = np.zeros(self.window)
        self._stamps = np.zeros(self.window, dtype=np.int64)
        self.size = 0
        self._next = 0
        self._residuals = _Welford()

    def _neighbors(self, x: np.ndarray) -> np.ndarray:
        dists = _kernels.sq_distances(self._xs[: self.size], x)
        order = np.lexsort((self._stamps[: self.size], dists))
        kk = min(self.k, self.size)
        return self._ys[: self.size][order[:kk]]

    def predict_one(self, x) -> float:
        x = self._check(x)
        if self.size == 0:
            raise InsufficientHistoryError("window is empty")
        return float(self._neighbors(x).mean())

    def predict_interval(self, x) -> PredictionInterval:
        x = self._check(x)
        if self.size < self.min_neighbors:
            raise InsufficientHistoryError(
                f"need {self.min_neighbors} stored observations, "
                f"have {self.size}")
        neigh = np.sort(self._neighbors(x))
        kk = len(neigh)
        point = float(neigh.mean())
        alpha = (1.0 - self.confidence) / 2.0
        # plotting-position ranks: the span between the chosen order
        # statistics covers about (hi-lo)/(kk+1) of the neighborhood
        # distribution, landing the nominal confidence in expectation
        lo_rank = min(max(math.floor(alpha * (kk + 1)), 1), kk) - 1
        hi_rank = min(max(math.ceil((1.0 - alpha) * (kk + 1)), 1), kk) - 1
        lower = min(float(neigh[lo_rank]), point)
        upper = max(float(neigh[hi_rank]), point)
        if kk >= 2:
            sigma = float(neigh.std(ddof=1))
        else:
            sigma = self._residuals.std
        return PredictionInterval(point, lower, upper, sigma)

    def learn_one(self, x, y: float) -> None:
        x = self._check(x)
        y = float(y)
        if self.size > 0:
            self._residuals.update(y - self.predict_one(x))
        i = self._next
        self._xs[i] = x
        self._ys[i] = y
        self._stamps[i] = self.n_seen
        self._next = (self._next + 1) % self.window
        self.size = min(self.size + 1, self.window)
        self.n_seen += 1

    def to_dict(self) -> dict:
        return {
            **self._base_dict(),
            "k": self.k, "window": self.window,
            "min_neighbors": self.min_neighbors,
            "xs": self._xs[: self.size].tolist(),
            "ys": self._ys[: self.size].tolist(),
            "stamps": self._stamps[: self.size].tolist(),
            "next": self._next,
            "residuals": self._residuals.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileKnn":
        out = cls(d["n_features"], d["seed"], d["confidence"], k=d["k"],
                  window=d["window"], min_neighbors=d["min_neighbors"])
        size = len(d["ys"])
        out._xs[:size] = d["xs"]
        out._ys[:size] = d["ys"]
        out._stamps[:size] = d["stamps"]
        out.size = size
        out._next = d["next"]
        out._residuals = _Welford.from_dict(d["residuals"])
        out.n_seen = d["n_seen"]
        return out


class QuantileForest(OnlineModel):
    """Drift-adaptive forest; intervals from merged leaf sketches."""

    kind = "qarf"

    def __init__(self, n_features: int, seed: int = 0,
                 confidence: float = 0.90, n_trees: int = 10,
                 lambda_bag: float = 6.0, grace_period: int = 50,
                 delta_split: float = 1e-5, tie_tau: float = 0.05,
                 max_depth: int = 12, n_bins: int = 10,
                 subspace: int | None = None, sketch_k: int = 64,
                 warn_delta: float = 0.01, drift_delta: float = 0.002,
                 disable_drift: bool = False):
        super().__init__(n_features, seed, confidence)
        self.forest = AdaptiveForest(
            n_features, n_trees=n_trees, seed=seed, lambda_bag=lambda_bag,
            grace_period=grace_period, delta_split=delta_split,
            tie_tau=tie_tau, n_bins=n_bins, max_depth=max_depth,
            subspace=subspace, sketch_k=sketch_k, warn_delta=warn_delta,
            drift_delta=drift_delta, disable_drift=disable_drift)

    def predict_one(self, x) -> float:
        return self.forest.predict_one(self._check(x))

    def predict_interval(self, x) -> PredictionInterval:
        x = self._check(x)
        sketch = self.forest.merged_sketch(x)
        if sketch.n < 2:
            raise InsufficientHistoryError("leaf sketches are near-empty")
        point = self.forest.predict_one(x)
        alpha = (1.0 - self.confidence) / 2.0
        lower = min(sketch.quantile(alpha), point)
        upper = max(sketch.quantile(1.0 - alpha), point)
        sigma = sketch.moments()[1]
        return PredictionInterval(point, lower, upper, sigma)

    def learn_one(self, x, y: float) -> None:
        self.forest.learn_one(self._check(x), float(y))
        self.n_seen += 1

    # Forest state is large and regrows quickly; checkpoints intentionally
    # capture configuration only, not the tree structures.
    def to_dict(self) -> dict:
        f = self.forest
        return {
            **self._base_dict(),
            "n_trees": f.n_trees, "lambda_bag": f.lambda_bag,
            "warn_delta": f.warn_delta, "drift_delta": f.drift_delta,
            "disable_drift": f.disable_drift,
            **{k: v for k, v in f._tree_kw.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileForest":
        keys = ("n_trees", "lambda_bag", "grace_period", "delta_split",
                "tie_tau", "n_bins", "max_depth", "subspace", "sketch_k",
                "warn_delta", "drift_delta", "disable_drift")
        return cls(d["n_features"], d["seed"], d["confidence"],
                   **{k: d[k] for k in keys})


class McDropoutNet(OnlineModel):
    """Feed-forward net with dropout kept on for uncertainty sampling.

    Training uses inverted dropout (activations scaled by 1/(1-p) while
    the mask is applied) so the deterministic pass needs no rescaling.
    The interval assumes a Gaussian predictive distribution with

        sigma^2 = var over B stochastic passes        (model uncertainty)
                + mean of the last few squared errors (observation noise)

    computed in standardized target units and mapped back.  Stochastic
    passes draw their masks from a generator re-derived from (seed, step
    count), so predicting is repeatable and never perturbs training.
    """

    kind = "mcnn"

    def __init__(self, n_features: int, seed: int = 0,
                 confidence: float = 0.90, hidden: tuple[int, ...] = (16,),
                 dropout: float = 0.1, lr: float = 0.02, n_passes: int = 50,
                 residual_window: int = 10, max_grad_norm: float = 10.0):
        super().__init__(n_features, seed, confidence)
        hidden = tuple(int(h) for h in hidden)
        if not hidden or any(h < 1 for h in hidden):
            raise ValueError("hidden must name at least one positive width")
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if n_passes < 2:
            raise ValueError("need at least 2 stochastic passes")
        if residual_window < 1:
            raise ValueError("residual_window must be positive")
        if max_grad_norm <= 0:
            raise ValueError("max_grad_norm must be positive")
        self.hidden = hidden
        self.dropout = float(dropout)
        self.lr = float(lr)
        self.n_passes = int(n_passes)
        self.residual_window = int(residual_window)
        self.max_grad_norm = float(max_grad_norm)

        self._train_rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([self.seed, 0x7E57])))
        init = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([self.seed, 0x1417])))
        sizes = (n_features,) + hidden + (1,)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            std = math.sqrt(2.0 / max(fan_in, 1))
            self.weights.append(init.normal(0.0, std, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))
        self._scaler = _TargetScaler()
        self._sq_residuals: list[float] = []

    # -- forward/backward ------------------------------------------------

    def _forward(self, x: np.ndarray, masks: list[np.ndarray] | None):
        """Returns (output, activations); masks are per hidden layer."""
        acts = [x]
        a = x
        for i, (w, b) in enumerate(zip(self.weights[:-1], self.biases[:-1])):
            a = np.maximum(w @ a + b, 0.0)
            if masks is not None:
                a = a * masks[i] / (1.0 - self.dropout)
            acts.append(a)
        out = float((self.weights[-1] @ a + self.biases[-1])[0])
        return out, acts

    def _forward_batch(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """All stochastic passes at once; rows are passes."""
        a = np.broadcast_to(x, (self.n_passes, len(x)))
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w.T + b, 0.0)
            mask = rng.random(a.shape) >= self.dropout
            a = a * mask / (1.0 - self.dropout)
        return (a @ self.weights[-1].T + self.biases[-1]).ravel()

    def _sample_masks(self, rng: np.random.Generator) -> list[np.ndarray]:
        return [(rng.random(h) >= self.dropout).astype(float)
                for h in self.hidden]

    def predict_one(self, x) -> float:
        x = self._check(x)
        if self.n_seen == 0:
            raise InsufficientHistoryError("net has not seen any target")
        out, _ = self._forward(x, masks=None)
        return self._scaler.inverse(out)

    def predict_interval(self, x) -> PredictionInterval:
        x = self._check(x)
        if self.n_seen == 0:
            raise InsufficientHistoryError("net has not seen any target")
        out, _ = self._forward(x, masks=None)
        point = self._scaler.inverse(out)

        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([self.seed, 0xACC, self.n_seen])))
        samples = self._forward_batch(x, rng)
        var_model = float(np.mean((samples - samples.mean()) ** 2))
        var_noise = (sum(self._sq_residuals) / len(self._sq_residuals)
                     if self._sq_residuals else 0.0)
        sigma = self._scaler.inverse_spread(math.sqrt(var_model + var_noise))
        return PredictionInterval(point, point - self.z * sigma,
                                  point + self.z * sigma, sigma)

    def learn_one(self, x, y: float) -> None:
        x = self._check(x)
        # clamp the standardized target: the running scaler can be wildly
        # off for the first few observations, and a single huge squared
        # error must not blow up the weights or the residual window
        y_z = float(np.clip(self._scaler.transform(float(y)), -10.0, 10.0))

        with np.errstate(over="ignore", invalid="ignore"):
            out_pre, _ = self._forward(x, masks=None)
            self._sq_residuals.append(float(np.square(np.float64(y_z - out_pre))))
        if len(self._sq_residuals) > self.residual_window:
            self._sq_residuals.pop(0)

        masks = self._sample_masks(self._train_rng)
        with np.errstate(over="ignore", invalid="ignore"):
            out, acts = self._forward(x, masks)
            grad_out = out - y_z  # d/d_out of 0.5 (out - y)^2

            keep = 1.0 - self.dropout
            delta = np.array([grad_out])
            grads_w: list[np.ndarray] = []
            grads_b: list[np.ndarray] = []
            for i in range(len(self.weights) - 1, -1, -1):
                a_prev = acts[i]
                grads_w.append(np.outer(delta, a_prev))
                grads_b.append(delta)
                if i > 0:
                    # post-dropout activation is positive only where the
                    # unit both fired and survived the mask, so one
                    # indicator covers the relu and dropout derivatives
                    delta = (self.weights[i].T @ delta) * (acts[i] > 0.0) / keep
            grads_w.reverse()
            grads_b.reverse()
            norm = math.sqrt(sum(float((g ** 2).sum())
                                 for g in grads_w + grads_b))
            scale = 1.0
            if math.isfinite(norm) and norm > self.max_grad_norm:
                scale = self.max_grad_norm / norm
            for i in range(len(self.weights)):
                self.weights[i] -= self.lr * scale * grads_w[i]
                self.biases[i] -= self.lr * scale * grads_b[i]
        if not all(np.isfinite(w).all() for w in self.weights):
            raise DivergenceError("network weights left the finite range")
        self._scaler.update(float(y))
        self.n_seen += 1

    def to_dict(self) -> dict:
        return {
            **self._base_dict(),
            "hidden": list(self.hidden), "dropout": self.dropout,
            "lr": self.lr, "n_passes": self.n_passes,
            "residual_window": self.residual_window,
            "max_grad_norm": self.max_grad_norm,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "scaler": self._scaler.to_dict(),
            "sq_residuals": list(self._sq_residuals),
            "train_rng": self._train_rng.bit_generator.state,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "McDropoutNet":
        out = cls(d["n_features"], d["seed"], d["confidence"],
                  hidden=tuple(d["hidden"]), dropout=d["dropout"], lr=d["lr"],
                  n_passes=d["n_passes"], residual_window=d["residual_window"],
                  max_grad_norm=d["max_grad_norm"])
        out.weights = [np.asarray(w) for w in d["weights"]]
        out.biases = [np.asarray(b) for b in d["biases"]]
        out._scaler = _TargetScaler.from_dict(d["scaler"])
        out._sq_residuals = list(d["sq_residuals"])
        out._train_rng.bit_generator.state = d["train_rng"]
        out.n_seen = d["n_seen"]
        return out


_REGISTRY = {
    "mean": MeanBaseline,
    "qr": QuantileRegressor,
    "qknn": QuantileKnn,
    "qarf": QuantileForest,
    "mcnn": McDropoutNet,
}


def make_model(kind: str, n_features: int, seed: int = 0,
               confidence: float = 0.90, **hyper) -> OnlineModel:
    if kind not in _REGISTRY:
        raise ValueError(f"unknown model kind {kind!r}; know {MODEL_KINDS}")
    return _REGISTRY[kind](n_features, seed, confidence, **hyper)


def model_from_dict(d: dict) -> OnlineModel:
    if d.get("version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {d.get('version')}")
    kind = d.get("kind")
    if kind not in _REGISTRY:
        raise ValueError(f"unknown model kind {kind!r}")
    return _REGISTRY[kind].from_dict(d)
