"""Feature schema, encoders, and online standardization.

A schema is an ordered list of descriptors.  Each descriptor pulls one
value from a raw feature mapping and encodes it as one or more numeric
columns:

* ``numeric``: the value itself, one column.
* ``cyclic``: sine and cosine of 2*pi*phase/period, two columns, so that
  values at both ends of a wrapping range (hour 23 vs hour 0) end up
  close together.
* ``onehot``: one indicator column per category.

Missing values (``None`` or NaN) encode as NaN for numeric/cyclic
columns and all-zeros for one-hot groups; the standardizer maps NaN to 0,
which after centering means "average".  Encoded vectors are standardized
online: each column is shifted and scaled by the running mean and
standard deviation of everything seen so far, with the statistics updated
only after the current vector is transformed, so the output never
depends on the example being encoded.  One-hot columns pass through
unscaled.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

SCHEMA_FORMAT_VERSION = 1

# Ordered bins mapping hour-of-day to a coarse daypart category.
PART_OF_DAY_BINS = (
    ("night", 0.0, 6.0),
    ("morning", 6.0, 11.0),
    ("noon", 11.0, 13.0),
    ("afternoon", 13.0, 17.0),
    ("evening", 17.0, 24.0),
)
PART_OF_DAY_CATEGORIES = ("morning", "noon", "afternoon", "evening", "night")


def part_of_day(hour: float) -> str:
    if not 0.0 <= hour < 24.0:
        raise ValueError(f"hour out of range: {hour}")
    for name, lo, hi in PART_OF_DAY_BINS:
        if lo <= hour < hi:
            return name
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class FeatureSpec:
    """One descriptor: where to read the value and how to encode it."""

    name: str
    kind: str  # "numeric" | "cyclic" | "onehot"
    source: str
    period: float = 0.0  # cyclic only
    offset: float = 0.0  # cyclic only: phase = value - offset
    categories: tuple[str, ...] = ()  # onehot only

    def __post_init__(self):
        if self.kind not in ("numeric", "cyclic", "onehot"):
            raise ValueError(f"unknown descriptor kind: {self.kind}")
        if self.kind == "cyclic" and self.period <= 0:
            raise ValueError(f"cyclic descriptor {self.name} needs a period > 0")
        if self.kind == "onehot" and not self.categories:
            raise ValueError(f"onehot descriptor {self.name} needs categories")

    @property
    def width(self) -> int:
        if self.kind == "numeric":
            return 1
        if self.kind == "cyclic":
            return 2
        return len(self.categories)

    @property
    def columns(self) -> tuple[str, ...]:
        if self.kind == "numeric":
            return (self.name,)
        if self.kind == "cyclic":
            return (self.name + "_sin", self.name + "_cos")
        return tuple(f"{self.name}={c}" for c in self.categories)


class FeatureSchema:
    """Ordered collection of descriptors with encoding to a flat vector."""

    def __init__(self, specs: list[FeatureSpec]):
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate descriptor names")
        self.specs = list(specs)
        self._slices: dict[str, slice] = {}
        at = 0
        for s in self.specs:
            self._slices[s.name] = slice(at, at + s.width)
            at += s.width
        self.dim = at

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    @property
    def columns(self) -> list[str]:
        out: list[str] = []
        for s in self.specs:
            out.extend(s.columns)
        return out

    def group_slice(self, name: str) -> slice:
        return self._slices[name]

    def passthrough_mask(self) -> np.ndarray:
        """True for columns the standardizer must leave untouched."""
        mask = np.zeros(self.dim, dtype=bool)
        for s in self.specs:
            if s.kind == "onehot":
                mask[self._slices[s.name]] = True
        return mask

    def subset(self, names: list[str]) -> "FeatureSchema":
        known = set(self.names)
        unknown = [n for n in names if n not in known]
        if unknown:
            raise ValueError(f"unknown descriptors: {unknown}")
        keep = set(names)
        return FeatureSchema([s for s in self.specs if s.name in keep])

    def encode(self, raw: dict) -> np.ndarray:
        x = np.zeros(self.dim)
        for s in self.specs:
            sl = self._slices[s.name]
            v = raw.get(s.source)
            if s.kind == "onehot":
                if v is None:
                    continue
                if v not in s.categories:
                    raise ValueError(
                        f"unknown category {v!r} for descriptor {s.name}")
                x[sl.start + s.categories.index(v)] = 1.0
                continue
            if v is None or (isinstance(v, float) and math.isnan(v)):
                x[sl] = np.nan
                continue
            v = float(v)
            if s.kind == "numeric":
                x[sl.start] = v
            else:
                phase = 2.0 * math.pi * (v - s.offset) / s.period
                x[sl.start] = math.sin(phase)
                x[sl.start + 1] = math.cos(phase)
        return x

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_FORMAT_VERSION,
            "specs": [
                {
                    "name": s.name, "kind": s.kind, "source": s.source,
                    "period": s.period, "offset": s.offset,
                    "categories": list(s.categories),
                }
                for s in self.specs
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSchema":
        if data.get("version") != SCHEMA_FORMAT_VERSION:
            raise ValueError(f"unsupported schema format: {data.get('version')}")
        return cls([
            FeatureSpec(d["name"], d["kind"], d["source"], d["period"],
                        d["offset"], tuple(d["categories"]))
            for d in data["specs"]
        ])


def default_schema() -> FeatureSchema:
    """Every descriptor the pipeline can derive from one day of context."""
    n = FeatureSpec
    return FeatureSchema([
        n("day_of_month", "numeric", "day_of_month"),
        n("day_of_month_cyc", "cyclic", "day_of_month", period=31.0, offset=1.0),
        n("day_of_week", "numeric", "day_of_week"),
        n("day_of_week_cyc", "cyclic", "day_of_week", period=7.0),
        n("is_workday", "numeric", "is_workday"),
        n("prev_start_hour", "numeric", "prev_start_hour"),
        n("prev_start_hour_cyc", "cyclic", "prev_start_hour", period=24.0),
        n("prev_start_minute", "numeric", "prev_start_minute"),
        n("prev_start_minute_cyc", "cyclic", "prev_start_minute", period=60.0),
        n("prev_start_part_of_day", "onehot", "prev_start_part_of_day",
          categories=PART_OF_DAY_CATEGORIES),
        n("prev_end_hours", "numeric", "prev_end_hours"),
        n("prev_end_hours_cyc", "cyclic", "prev_end_hours", period=24.0),
        n("prev_distance_km", "numeric", "prev_distance_km"),
        n("charge_start_hours", "numeric", "charge_start_hours"),
        n("charge_start_hours_cyc", "cyclic", "charge_start_hours", period=24.0),
        n("charge_soc_initial", "numeric", "charge_soc_initial"),
        n("prev_speed_mean", "numeric", "prev_speed_mean"),
        n("prev_speed_std", "numeric", "prev_speed_std"),
        n("prev_accel_mean", "numeric", "prev_accel_mean"),
        n("prev_accel_std", "numeric", "prev_accel_std"),
        n("prev_temp_mean", "numeric", "prev_temp_mean"),
        n("prev_sunload_mean", "numeric", "prev_sunload_mean"),
        n("prev_soc_mean", "numeric", "prev_soc_mean"),
        n("target_hist_avg", "numeric", "target_hist_avg"),
        n("target_run_avg", "numeric", "target_run_avg"),
    ])


class RunningStats:
    """Welford running mean/std plus a short sliding-window mean."""

    def __init__(self, window: int = 7):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0
        self._window: deque[float] = deque(maxlen=window)

    def update(self, v: float) -> None:
        v = float(v)
        self.count += 1
        delta = v - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (v - self.mean)
        self._window.append(v)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(max(self._m2 / (self.count - 1), 0.0))

    @property
    def window_mean(self) -> float:
        if not self._window:
            return float("nan")
        return sum(self._window) / len(self._window)


class OnlineStandardizer:
    """Per-column running standardization with transform-then-update order.

    Columns flagged in ``passthrough`` are returned unchanged.  For the
    rest, the output is (x - mean) / std using statistics accumulated
    from previous calls only; columns with fewer than two prior finite
    observations, a degenerate spread, or a non-finite input produce 0.
    Standardized values are clipped to [-8, 8]: with only a handful of
    observations the running std can be far too small, and an unclipped
    z in the hundreds hands gradient learners a step they never recover
    from.
    """

    def __init__(self, dim: int, passthrough: np.ndarray | None = None):
        self.dim = dim
        self.passthrough = (np.zeros(dim, dtype=bool)
                            if passthrough is None else np.asarray(passthrough))
        self.count = np.zeros(dim)
        self.mean = np.zeros(dim)
        self._m2 = np.zeros(dim)

    def std(self) -> np.ndarray:
        out = np.zeros(self.dim)
        ok = self.count >= 2
        out[ok] = np.sqrt(np.maximum(self._m2[ok] / (self.count[ok] - 1), 0.0))
        return out

    def transform_update(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {x.shape}")
        std = self.std()
        ready = (self.count >= 2) & (std > 1e-9) & np.isfinite(x)
        z = np.zeros(self.dim)
        z[ready] = np.clip((x[ready] - self.mean[ready]) / std[ready],
                           -8.0, 8.0)
        z[self.passthrough] = np.where(np.isfinite(x[self.passthrough]),
                                       x[self.passthrough], 0.0)

        finite = np.isfinite(x) & ~self.passthrough
        self.count[finite] += 1
        delta = x[finite] - self.mean[finite]
        self.mean[finite] += delta / self.count[finite]
        self._m2[finite] += delta * (x[finite] - self.mean[finite])
        return z


@dataclass
class FeaturePipeline:
    """Stateful per-vehicle, per-target encoder.

    ``transform`` injects the running target averages into the raw
    mapping, encodes, and standardizes.  ``update_target`` must be called
    once per day after the true target is revealed; until then the
    averages reflect only past days.
    """

    schema: FeatureSchema
    window: int = 7
    _std: OnlineStandardizer = field(init=False)
    _target: RunningStats = field(init=False)

    def __post_init__(self):
        self._std = OnlineStandardizer(self.schema.dim,
                                       self.schema.passthrough_mask())
        self._target = RunningStats(self.window)

    def transform(self, raw: dict) -> np.ndarray:
        raw = dict(raw)
        if self._target.count > 0:
            raw["target_hist_avg"] = self._target.mean
            raw["target_run_avg"] = self._target.window_mean
        else:
            raw["target_hist_avg"] = None
            raw["target_run_avg"] = None
        return self._std.transform_update(self.schema.encode(raw))

    def update_target(self, y: float) -> None:
        self._target.update(y)
