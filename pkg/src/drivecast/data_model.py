"""Session records, cleanup filters, and per-day example construction.

Raw input is a stream of drive and charge sessions per vehicle.  Cleanup
drops noise sessions shorter than 50 seconds, merges drives separated by
less than 15 minutes (a short stop, not a new trip), and discards
vehicles with fewer than 50 drives of history.  From the cleaned stream,
one example per active day is built: the targets are the departure time
(decimal hours after midnight) and distance of the day's first drive,
and the features describe the previous drive, the most recent charge,
and the calendar day.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time

from .exceptions import DataError
from .features import part_of_day

MIN_SESSION_SECONDS = 50.0
MERGE_GAP_SECONDS = 900.0
MIN_DRIVES_PER_VEHICLE = 50

SESSION_COLUMNS = [
    "vehicle_id", "kind", "start_iso8601", "end_iso8601", "distance_km",
    "soc_initial_pct", "speed_mean", "speed_std", "accel_mean", "accel_std",
    "temp_mean", "sunload_mean", "soc_mean",
]

# Raw feature keys a daily example can carry, in canonical column order.
RAW_FEATURE_KEYS = (
    "day_of_month", "day_of_week", "is_workday",
    "prev_start_hour", "prev_start_minute", "prev_start_part_of_day",
    "prev_end_hours", "prev_distance_km",
    "charge_start_hours", "charge_soc_initial",
    "prev_speed_mean", "prev_speed_std", "prev_accel_mean", "prev_accel_std",
    "prev_temp_mean", "prev_sunload_mean", "prev_soc_mean",
)

NAN = float("nan")


def _hours(dt: datetime) -> float:
    return (dt.hour + dt.minute / 60.0 + dt.second / 3600.0
            + dt.microsecond / 3.6e9)


@dataclass
class TripSession:
    vehicle_id: str
    start: datetime
    end: datetime
    distance_km: float
    speed_mean: float = NAN
    speed_std: float = NAN
    accel_mean: float = NAN
    accel_std: float = NAN
    temp_mean: float = NAN
    sunload_mean: float = NAN
    soc_mean: float = NAN

    def __post_init__(self):
        if self.end <= self.start:
            raise DataError(
                f"trip for {self.vehicle_id} ends at or before its start "
                f"({self.start} .. {self.end})")
        if not self.distance_km >= 0.0:
            raise DataError(
                f"trip for {self.vehicle_id} has negative or missing "
                f"distance: {self.distance_km}")
        for name in ("speed_std", "accel_std"):
            v = getattr(self, name)
            if math.isfinite(v) and v < 0.0:
                raise DataError(f"trip for {self.vehicle_id}: {name} < 0")

    @property
    def duration_s(self) -> float:
        return (self.end - self.start).total_seconds()


@dataclass
class ChargeSession:
    vehicle_id: str
    start: datetime
    end: datetime
    soc_initial_pct: float = NAN

    def __post_init__(self):
        if self.end <= self.start:
            raise DataError(
                f"charge for {self.vehicle_id} ends at or before its start "
                f"({self.start} .. {self.end})")
        v = self.soc_initial_pct
        if math.isfinite(v) and not 0.0 <= v <= 100.0:
            raise DataError(
                f"charge for {self.vehicle_id}: initial SoC {v} outside 0..100")

    @property
    def duration_s(self) -> float:
        return (self.end - self.start).total_seconds()


@dataclass
class VehicleHistory:
    vehicle_id: str
    trips: list[TripSession] = field(default_factory=list)
    charges: list[ChargeSession] = field(default_factory=list)


@dataclass
class DailyExample:
    vehicle_id: str
    day: date
    features: dict
    target_departure: float
    target_distance: float


# -- cleanup ------------------------------------------------------------


def filter_short_sessions(trips: list[TripSession],
                          min_duration_s: float = MIN_SESSION_SECONDS
                          ) -> list[TripSession]:
    return [t for t in trips if t.duration_s >= min_duration_s]


def _weighted_mean(parts: list[tuple[float, float]]) -> float:
    ok = [(w, v) for w, v in parts if math.isfinite(v) and w > 0]
    if not ok:
        return NAN
    total = sum(w for w, _ in ok)
    return sum(w * v for w, v in ok) / total


def _pooled_std(parts: list[tuple[float, float, float]]) -> float:
    """Std of the concatenation from per-part (weight, mean, std)."""
    ok = [(w, m, s) for w, m, s in parts
          if math.isfinite(m) and math.isfinite(s) and w > 0]
    if not ok:
        return NAN
    total = sum(w for w, _, _ in ok)
    mean = sum(w * m for w, m, _ in ok) / total
    second = sum(w * (s * s + m * m) for w, m, s in ok) / total
    return math.sqrt(max(second - mean * mean, 0.0))


def _merge_pair(a: TripSession, a_weight: float, b: TripSession) -> TripSession:
    wa, wb = a_weight, b.duration_s
    return TripSession(
        vehicle_id=a.vehicle_id,
        start=a.start,
        end=b.end,
        distance_km=a.distance_km + b.distance_km,
        speed_mean=_weighted_mean([(wa, a.speed_mean), (wb, b.speed_mean)]),
        speed_std=_pooled_std([(wa, a.speed_mean, a.speed_std),
                               (wb, b.speed_mean, b.speed_std)]),
        accel_mean=_weighted_mean([(wa, a.accel_mean), (wb, b.accel_mean)]),
        accel_std=_pooled_std([(wa, a.accel_mean, a.accel_std),
                               (wb, b.accel_mean, b.accel_std)]),
        temp_mean=_weighted_mean([(wa, a.temp_mean), (wb, b.temp_mean)]),
        sunload_mean=_weighted_mean([(wa, a.sunload_mean), (wb, b.sunload_mean)]),
        soc_mean=_weighted_mean([(wa, a.soc_mean), (wb, b.soc_mean)]),
    )


def merge_adjacent_sessions(trips: list[TripSession],
                            max_gap_s: float = MERGE_GAP_SECONDS
                            ) -> list[TripSession]:
    """Fold drives separated by less than ``max_gap_s`` into one drive.

    Signal means and stds of merged drives are pooled weighted by the
    measured driving seconds of each part, so stop time between parts
    never dilutes the statistics.  Overlapping drives raise DataError.
    """
    if not trips:
        return []
    ordered = sorted(trips, key=lambda t: t.start)
    out: list[TripSession] = []
    pend = ordered[0]
    pend_weight = pend.duration_s
    for t in ordered[1:]:
        gap = (t.start - pend.end).total_seconds()
        if gap < 0:
            raise DataError(
                f"overlapping trips for {t.vehicle_id}: one ends {pend.end}, "
                f"next starts {t.start}")
        if gap < max_gap_s:
            pend = _merge_pair(pend, pend_weight, t)
            pend_weight += t.duration_s
        else:
            out.append(pend)
            pend = t
            pend_weight = t.duration_s
    out.append(pend)
    return out


def preprocess_history(history: VehicleHistory,
                       min_duration_s: float = MIN_SESSION_SECONDS,
                       max_gap_s: float = MERGE_GAP_SECONDS) -> VehicleHistory:
    trips = filter_short_sessions(history.trips, min_duration_s)
    trips = merge_adjacent_sessions(trips, max_gap_s)
    charges = sorted(history.charges, key=lambda c: c.start)
    return VehicleHistory(history.vehicle_id, trips, charges)


def filter_sparse_vehicles(histories: list[VehicleHistory],
                           min_drives: int = MIN_DRIVES_PER_VEHICLE
                           ) -> list[VehicleHistory]:
    """Keep vehicles with enough drives to learn from.  Only drives count
    toward the threshold; charge sessions do not."""
    return [h for h in histories if len(h.trips) >= min_drives]


def preprocess_fleet(histories: dict[str, VehicleHistory],
                     min_duration_s: float = MIN_SESSION_SECONDS,
                     max_gap_s: float = MERGE_GAP_SECONDS,
                     min_drives: int = MIN_DRIVES_PER_VEHICLE
                     ) -> tuple[dict[str, VehicleHistory], list[str]]:
    """Clean every vehicle and drop the sparse ones.

    Returns the kept histories keyed by vehicle id plus the ids that were
    dropped for having too little history.
    """
    cleaned = {vid: preprocess_history(h, min_duration_s, max_gap_s)
               for vid, h in histories.items()}
    kept = {h.vehicle_id: h
            for h in filter_sparse_vehicles(list(cleaned.values()), min_drives)}
    dropped = [vid for vid in cleaned if vid not in kept]
    return kept, dropped


# -- daily examples -----------------------------------------------------


def _check_ordered(sessions, what: str) -> None:
    for a, b in zip(sessions, sessions[1:]):
        if b.start < a.end:
            raise DataError(
                f"overlapping {what} for {a.vehicle_id}: one ends {a.end}, "
                f"next starts {b.start}")


def build_daily_examples(history: VehicleHistory) -> list[DailyExample]:
    """One example per day that has at least one drive.

    The previous-drive features come from the last drive that ended
    before the day's midnight, the charge features from the last charge
    started before midnight (typically the overnight charge).  A charge
    that is still running when the day's first drive departs means the
    two clocks disagree and raises DataError.
    """
    trips = sorted(history.trips, key=lambda t: t.start)
    charges = sorted(history.charges, key=lambda c: c.start)
    _check_ordered(trips, "trips")
    _check_ordered(charges, "charges")

    by_day: dict[date, TripSession] = {}
    for t in trips:
        day = t.start.date()
        if day not in by_day:
            by_day[day] = t  # first drive of the day (trips are sorted)

    examples: list[DailyExample] = []
    ti = ci = 0
    last_trip: TripSession | None = None
    last_charge: ChargeSession | None = None
    for day in sorted(by_day):
        first = by_day[day]
        midnight = datetime.combine(day, time.min)
        while ti < len(trips) and trips[ti].end < midnight:
            last_trip = trips[ti]
            ti += 1
        while ci < len(charges) and charges[ci].start < midnight:
            last_charge = charges[ci]
            ci += 1

        feats: dict = {
            "day_of_month": float(day.day),
            "day_of_week": float(day.weekday()),
            "is_workday": 1.0 if day.weekday() < 5 else 0.0,
        }
        if last_trip is not None:
            feats.update({
                "prev_start_hour": float(last_trip.start.hour),
                "prev_start_minute": float(last_trip.start.minute),
                "prev_start_part_of_day": part_of_day(_hours(last_trip.start)),
                "prev_end_hours": _hours(last_trip.end),
                "prev_distance_km": last_trip.distance_km,
                "prev_speed_mean": last_trip.speed_mean,
                "prev_speed_std": last_trip.speed_std,
                "prev_accel_mean": last_trip.accel_mean,
                "prev_accel_std": last_trip.accel_std,
                "prev_temp_mean": last_trip.temp_mean,
                "prev_sunload_mean": last_trip.sunload_mean,
                "prev_soc_mean": last_trip.soc_mean,
            })
        if last_charge is not None:
            if last_charge.end > first.start:
                raise DataError(
                    f"charge for {history.vehicle_id} ends {last_charge.end}, "
                    f"after the first drive departs {first.start}; "
                    "session clocks disagree")
            feats.update({
                "charge_start_hours": _hours(last_charge.start),
                "charge_soc_initial": last_charge.soc_initial_pct,
            })

        examples.append(DailyExample(
            vehicle_id=history.vehicle_id,
            day=day,
            features=feats,
            target_departure=_hours(first.start),
            target_distance=first.distance_km,
        ))
    return examples


# -- CSV I/O ------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and not math.isfinite(v):
        return ""
    return repr(float(v))


def _parse_float(s: str, row: int, col: str) -> float:
    if s is None or s.strip() == "":
        return NAN
    try:
        return float(s)
    except ValueError:
        raise DataError(f"row {row}: bad number in {col}: {s!r}") from None


def _parse_dt(s: str, row: int, col: str) -> datetime:
    try:
        return datetime.fromisoformat(s.strip())
    except ValueError:
        raise DataError(f"row {row}: bad timestamp in {col}: {s!r}") from None


def read_sessions_csv(path) -> dict[str, VehicleHistory]:
    """Parse a session stream; returns histories keyed by vehicle id.

    Vehicles appear in first-seen order.  Any malformed row raises
    DataError naming the row.
    """
    histories: dict[str, VehicleHistory] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SESSION_COLUMNS:
            raise DataError(
                f"unexpected session columns {reader.fieldnames}, "
                f"want {SESSION_COLUMNS}")
        for i, rec in enumerate(reader, start=2):
            vid = (rec["vehicle_id"] or "").strip()
            if not vid:
                raise DataError(f"row {i}: missing vehicle_id")
            kind = (rec["kind"] or "").strip()
            start = _parse_dt(rec["start_iso8601"], i, "start_iso8601")
            end = _parse_dt(rec["end_iso8601"], i, "end_iso8601")
            hist = histories.setdefault(vid, VehicleHistory(vid))
            try:
                if kind == "drive":
                    hist.trips.append(TripSession(
                        vid, start, end,
                        distance_km=_parse_float(rec["distance_km"], i,
                                                 "distance_km"),
                        speed_mean=_parse_float(rec["speed_mean"], i, "speed_mean"),
                        speed_std=_parse_float(rec["speed_std"], i, "speed_std"),
                        accel_mean=_parse_float(rec["accel_mean"], i, "accel_mean"),
                        accel_std=_parse_float(rec["accel_std"], i, "accel_std"),
                        temp_mean=_parse_float(rec["temp_mean"], i, "temp_mean"),
                        sunload_mean=_parse_float(rec["sunload_mean"], i,
                                                  "sunload_mean"),
                        soc_mean=_parse_float(rec["soc_mean"], i, "soc_mean"),
                    ))
                elif kind == "charge":
                    hist.charges.append(ChargeSession(
                        vid, start, end,
                        soc_initial_pct=_parse_float(rec["soc_initial_pct"], i,
                                                     "soc_initial_pct"),
                    ))
                else:
                    raise DataError(f"unknown session kind {kind!r}")
            except DataError as e:
                raise DataError(f"row {i}: {e}") from None
    return histories


def write_sessions_csv(path, histories: dict[str, VehicleHistory]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SESSION_COLUMNS)
        for vid in histories:
            h = histories[vid]
            rows = ([("drive", t) for t in h.trips]
                    + [("charge", c) for c in h.charges])
            rows.sort(key=lambda kt: kt[1].start)
            for kind, s in rows:
                if kind == "drive":
                    w.writerow([
                        vid, kind, s.start.isoformat(), s.end.isoformat(),
                        _fmt(s.distance_km), "",
                        _fmt(s.speed_mean), _fmt(s.speed_std),
                        _fmt(s.accel_mean), _fmt(s.accel_std),
                        _fmt(s.temp_mean), _fmt(s.sunload_mean),
                        _fmt(s.soc_mean),
                    ])
                else:
                    w.writerow([
                        vid, kind, s.start.isoformat(), s.end.isoformat(),
                        "", _fmt(s.soc_initial_pct), "", "", "", "", "", "", "",
                    ])


EXAMPLE_COLUMNS = (["vehicle_id", "date"] + list(RAW_FEATURE_KEYS)
                   + ["target_departure", "target_distance"])


def write_daily_examples_csv(path, examples: list[DailyExample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EXAMPLE_COLUMNS)
        for ex in examples:
            row = [ex.vehicle_id, ex.day.isoformat()]
            for key in RAW_FEATURE_KEYS:
                v = ex.features.get(key)
                if key == "prev_start_part_of_day":
                    row.append(v if v is not None else "")
                else:
                    row.append(_fmt(v))
            row.append(_fmt(ex.target_departure))
            row.append(_fmt(ex.target_distance))
            w.writerow(row)


def read_daily_examples_csv(path) -> list[DailyExample]:
    out: list[DailyExample] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EXAMPLE_COLUMNS:
            raise DataError(
                f"unexpected example columns {reader.fieldnames}")
        for i, rec in enumerate(reader, start=2):
            feats: dict = {}
            for key in RAW_FEATURE_KEYS:
                s = rec[key]
                if key == "prev_start_part_of_day":
                    if s:
                        feats[key] = s
                    continue
                v = _parse_float(s, i, key)
                if math.isfinite(v):
                    feats[key] = v
            try:
                day = date.fromisoformat(rec["date"])
            except ValueError:
                raise DataError(f"row {i}: bad date {rec['date']!r}") from None
            dep = _parse_float(rec["target_departure"], i, "target_departure")
            dist = _parse_float(rec["target_distance"], i, "target_distance")
            if not (math.isfinite(dep) and math.isfinite(dist)):
                raise DataError(f"row {i}: missing target")
            out.append(DailyExample(rec["vehicle_id"], day, feats, dep, dist))
    return out
