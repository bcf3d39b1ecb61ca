"""Classify users as human/program and requests by access pattern.

A user is a *program* user for an object set when every object in the
set is requested more than ``min_daily_repeats`` times on every
calendar day covered by a running window.  Individual requests are
classed regular / real-time / overlapping from their spacing and
observation-window geometry, and overlapping requests decompose into
fresh vs duplicate portions against the user's prior transfers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import intervals
from .intervals import IntervalSet
from .trace import AccessRecord, Catalog, RequestSequence

DAY = 86400


class RequestClass(enum.Enum):
    REGULAR = "regular"
    REAL_TIME = "realtime"
    OVERLAPPING = "overlapping"
    UNCLASSIFIED = "unclassified"


class UserLabel(enum.Enum):
    HUMAN = "human"
    PROGRAM = "program"


@dataclass
class ClassifierConfig:
    window: float = 7 * DAY
    min_daily_repeats: int = 1
    pattern_days: int | None = None  # None: every day spanned by the window
    realtime_period_max: float = 300.0
    program_repeat_threshold: int = 3

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.min_daily_repeats < 1 or self.realtime_period_max <= 0:
            raise ValueError("classifier thresholds must be positive")

    @property
    def required_pattern_days(self) -> int:
        if self.pattern_days is not None:
            return self.pattern_days
        return max(1, round(self.window / DAY))


@dataclass
class UserClass:
    """Per-object-set verdicts; a user can be Program for one set and
    Human for everything else."""

    user_id: str
    program_sets: dict[frozenset, float] = field(default_factory=dict)

    @property
    def label(self) -> UserLabel:
        return UserLabel.PROGRAM if self.program_sets else UserLabel.HUMAN

    def is_program_object(self, object_id: str) -> bool:
        return any(object_id in s for s in self.program_sets)


def classify_request(prev: AccessRecord | None, cur: AccessRecord,
                     cfg: ClassifierConfig) -> RequestClass:
    """Class of `cur` given the previous request for the same (user, object).

    Real-time takes precedence over overlapping when both spacing and
    window intersection apply.
    """
    if prev is None:
        return RequestClass.UNCLASSIFIED
    if prev.user_id != cur.user_id or prev.object_id != cur.object_id:
        raise ValueError("prev and cur must come from the same user and object")
    if prev.ts > cur.ts:
        raise ValueError("prev must not be later than cur")
    if cur.ts - prev.ts <= cfg.realtime_period_max:
        return RequestClass.REAL_TIME
    if intervals.measure(intervals.intersect([prev.tr], [cur.tr])) > 0:
        return RequestClass.OVERLAPPING
    return RequestClass.REGULAR


def decompose_overlap(prev_ranges: IntervalSet,
                      cur: AccessRecord) -> tuple[IntervalSet, IntervalSet]:
    """Split the requested window into (fresh, duplicate) against history.

    The two parts partition cur.tr exactly in integer seconds.
    """
    prev = intervals.normalize(prev_ranges)
    requested = [cur.tr]
    duplicate = intervals.intersect(requested, prev)
    fresh = intervals.subtract(requested, prev)
    return fresh, duplicate


def _daily_sets(records, threshold: int) -> dict[int, set]:
    counts: dict[int, dict[str, int]] = {}
    for r in records:
        day = int(r.ts // DAY)
        per_obj = counts.setdefault(day, {})
        per_obj[r.object_id] = per_obj.get(r.object_id, 0) + 1
    return {
        day: {o for o, c in per_obj.items() if c >= threshold + 1}
        for day, per_obj in counts.items()
    }


def classify_user(seq: RequestSequence, cfg: ClassifierConfig, now: float,
                  history_start: float | None = None) -> UserClass:
    """Program/human verdict from the window ending at `now`.

    Complete days inside the window must each repeat the pattern; the
    partial day containing `now` counts once it already meets the
    threshold and is otherwise ignored (it cannot fail yet).  When
    `history_start` is given the window is clipped to it, so short
    traces are judged only on days that actually exist.
    """
    verdict = UserClass(seq.user_id)
    lo = now - cfg.window
    if history_start is not None:
        lo = max(lo, history_start)
    in_window = [r for r in seq.records if lo <= r.ts <= now]
    if not in_window:
        return verdict

    daily = _daily_sets(in_window, cfg.min_daily_repeats)
    first_day = int(lo // DAY)
    now_day = int(now // DAY)
    satisfied: list[set] = []
    for day in range(first_day, now_day + 1):
        day_set = daily.get(day, set())
        partial_trailing = day == now_day and now < (day + 1) * DAY
        if day_set:
            satisfied.append(day_set)
        elif not partial_trailing:
            return verdict  # a complete day broke the pattern
    if len(satisfied) < min(cfg.required_pattern_days, now_day - first_day + 1):
        return verdict
    common = frozenset(set.intersection(*satisfied)) if satisfied else frozenset()
    if common:
        verdict.program_sets[common] = now
    return verdict


class OnlineClassifier:
    """Incremental per-user classification state for trace replay.

    Feeds one record at a time and exposes, per user: the class of the
    latest request, the current program object set, the run length of
    consecutive real-time requests per object, and the fresh/duplicate
    decomposition against everything the user has requested before.
    """

    def __init__(self, cfg: ClassifierConfig, history_start: float = 0.0):
        self.cfg = cfg
        self.history_start = history_start
        self._prev: dict[tuple[str, str], AccessRecord] = {}
        self._ranges: dict[tuple[str, str], IntervalSet] = {}
        self._daily: dict[str, dict[int, dict[str, int]]] = {}
        self._program: dict[str, frozenset] = {}
        self._detected_at: dict[str, dict[frozenset, float]] = {}
        self._dirty: set[str] = set()
        self._rt_streak: dict[tuple[str, str], int] = {}
        self._gap: dict[tuple[str, str], float] = {}

    def observe(self, rec: AccessRecord) -> tuple[RequestClass, IntervalSet, IntervalSet]:
        """Ingest one record; returns (class, fresh, duplicate)."""
        key = (rec.user_id, rec.object_id)
        prev = self._prev.get(key)
        cls = classify_request(prev, rec, self.cfg)
        seen = self._ranges.get(key, [])
        fresh, dup = decompose_overlap(seen, rec)
        self._ranges[key] = intervals.union(seen, [rec.tr])
        self._prev[key] = rec
        if prev is not None:
            self._gap[key] = rec.ts - prev.ts
        if cls is RequestClass.REAL_TIME:
            self._rt_streak[key] = self._rt_streak.get(key, 0) + 1
        else:
            self._rt_streak[key] = 0

        day = int(rec.ts // DAY)
        per_day = self._daily.setdefault(rec.user_id, {})
        per_obj = per_day.setdefault(day, {})
        per_obj[rec.object_id] = per_obj.get(rec.object_id, 0) + 1
        self._dirty.add(rec.user_id)
        return cls, fresh, dup

    def realtime_streak(self, user_id: str, object_id: str) -> int:
        return self._rt_streak.get((user_id, object_id), 0)

    def observed_period(self, user_id: str, object_id: str) -> float | None:
        return self._gap.get((user_id, object_id))

    def prior_ranges(self, user_id: str, object_id: str) -> IntervalSet:
        return self._ranges.get((user_id, object_id), [])

    def program_set(self, user_id: str, now: float) -> frozenset:
        """Current program object set for the user (empty if Human)."""
        if user_id in self._dirty:
            self._refresh(user_id, now)
            self._dirty.discard(user_id)
        return self._program.get(user_id, frozenset())

    def is_program(self, user_id: str, object_id: str, now: float) -> bool:
        return object_id in self.program_set(user_id, now)

    def detections(self, user_id: str) -> dict[frozenset, float]:
        return self._detected_at.get(user_id, {})

    def _refresh(self, user_id: str, now: float) -> None:
        cfg = self.cfg
        lo = max(now - cfg.window, self.history_start)
        first_day = int(lo // DAY)
        now_day = int(now // DAY)
        threshold = cfg.min_daily_repeats + 1
        per_day = self._daily.get(user_id, {})
        satisfied: list[set] = []
        for day in range(first_day, now_day + 1):
            day_set = {o for o, c in per_day.get(day, {}).items() if c >= threshold}
            partial_trailing = day == now_day and now < (day + 1) * DAY
            if day_set:
                satisfied.append(day_set)
            elif not partial_trailing:
                self._program[user_id] = frozenset()
                return
        if len(satisfied) < min(cfg.required_pattern_days, now_day - first_day + 1):
            self._program[user_id] = frozenset()
            return
        common = frozenset(set.intersection(*satisfied)) if satisfied else frozenset()
        self._program[user_id] = common
        if common:
            per_user = self._detected_at.setdefault(user_id, {})
            per_user.setdefault(common, now)


# ---------------------------------------------------------------------------
# Whole-trace statistics (powers the classify command and calibration checks)
# ---------------------------------------------------------------------------

@dataclass
class TraceStats:
    n_users: int
    n_program_users: int
    n_requests: int
    volume_total: float
    volume_by_user_label: dict[str, float]
    volume_by_class: dict[str, float]
    overlap_fresh_volume: float
    overlap_duplicate_volume: float

    @property
    def program_user_share(self) -> float:
        return self.n_program_users / self.n_users if self.n_users else 0.0

    @property
    def program_volume_share(self) -> float:
        if self.volume_total == 0:
            return 0.0
        return self.volume_by_user_label.get("program", 0.0) / self.volume_total

    @property
    def classified_mix(self) -> dict[str, float]:
        """Volume shares over the three classified request types."""
        keys = ("regular", "realtime", "overlapping")
        total = sum(self.volume_by_class.get(k, 0.0) for k in keys)
        if total == 0:
            return {k: 0.0 for k in keys}
        return {k: self.volume_by_class.get(k, 0.0) / total for k in keys}

    @property
    def duplicate_share(self) -> float:
        total = self.overlap_fresh_volume + self.overlap_duplicate_volume
        return self.overlap_duplicate_volume / total if total else 0.0


def trace_statistics(records, catalog: Catalog,
                     cfg: ClassifierConfig | None = None) -> TraceStats:
    """Single-pass classification summary of a trace."""
    cfg = cfg or ClassifierConfig()
    start = records[0].ts if records else 0.0
    online = OnlineClassifier(cfg, history_start=start)
    volume_by_class: dict[str, float] = {}
    user_volume: dict[str, float] = {}
    ever_program: set[str] = set()
    fresh_vol = dup_vol = 0.0
    total = 0.0
    for rec in records:
        rate = catalog.rate(rec.object_id)
        size = rec.window_seconds * rate
        cls, fresh, dup = online.observe(rec)
        volume_by_class[cls.value] = volume_by_class.get(cls.value, 0.0) + size
        user_volume[rec.user_id] = user_volume.get(rec.user_id, 0.0) + size
        total += size
        if cls is RequestClass.OVERLAPPING:
            fresh_vol += intervals.measure(fresh) * rate
            dup_vol += intervals.measure(dup) * rate
        if online.program_set(rec.user_id, rec.ts):
            ever_program.add(rec.user_id)

    by_label = {"human": 0.0, "program": 0.0}
    for user, vol in user_volume.items():
        label = "program" if user in ever_program else "human"
        by_label[label] += vol
    return TraceStats(
        n_users=len(user_volume),
        n_program_users=len(ever_program),
        n_requests=len(records),
        volume_total=total,
        volume_by_user_label=by_label,
        volume_by_class=volume_by_class,
        overlap_fresh_volume=fresh_vol,
        overlap_duplicate_volume=dup_vol,
    )
