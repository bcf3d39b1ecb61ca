"""Access-trace data model, parsing, synthesis, and traffic rescaling.

A trace is a time-ordered list of requests, each asking for one data
object over an observation-time window.  The synthesizer builds
calibrated workloads with three program request shapes (regular,
real-time, overlapping) plus bursty human browsing, so that the
measured per-type transfer-volume mix and the human/program volume
split land on the configured targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .intervals import Interval

TRACE_HEADER = "ts,user_id,object_id,range_start,range_end"
CATALOG_HEADER = "object_id,instrument_type_id,location_id,data_rate"


class TraceFormatError(ValueError):
    """Raised for malformed trace or catalog files; carries the line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True, slots=True)
class DataObject:
    object_id: str
    instrument_type_id: int
    location_id: int
    data_rate: float  # bytes per second of observation time

    def __post_init__(self):
        if self.data_rate <= 0:
            raise ValueError(f"data_rate must be positive, got {self.data_rate}")


class Catalog:
    """Lookup table of data objects, unique by id and by (instrument, location)."""

    def __init__(self, objects):
        self._by_id: dict[str, DataObject] = {}
        self._by_key: dict[tuple[int, int], str] = {}
        for obj in objects:
            if obj.object_id in self._by_id:
                raise ValueError(f"duplicate object_id {obj.object_id}")
            key = (obj.instrument_type_id, obj.location_id)
            if key in self._by_key:
                raise ValueError(f"duplicate (instrument, location) {key}")
            self._by_id[obj.object_id] = obj
            self._by_key[key] = obj.object_id

    def __len__(self):
        return len(self._by_id)

    def __contains__(self, object_id: str):
        return object_id in self._by_id

    def __iter__(self):
        return iter(self._by_id.values())

    def get(self, object_id: str) -> DataObject:
        return self._by_id[object_id]

    def object_ids(self) -> list[str]:
        return list(self._by_id)

    def rate(self, object_id: str) -> float:
        return self._by_id[object_id].data_rate


@dataclass(frozen=True, slots=True)
class AccessRecord:
    """One request: (submission time, user, object, observation window)."""

    ts: float
    user_id: str
    object_id: str
    range_start: int
    range_end: int

    def __post_init__(self):
        if not math.isfinite(self.ts) or self.ts < 0:
            raise ValueError(f"ts must be finite and non-negative, got {self.ts}")
        if self.range_start >= self.range_end:
            raise ValueError(
                f"empty observation range [{self.range_start}, {self.range_end})"
            )

    @property
    def tr(self) -> Interval:
        return (self.range_start, self.range_end)

    @property
    def window_seconds(self) -> int:
        return self.range_end - self.range_start

    def transfer_bytes(self, catalog: Catalog) -> float:
        return self.window_seconds * catalog.rate(self.object_id)


def record_sort_key(r: AccessRecord):
    return (r.ts, r.object_id, r.range_start, r.user_id)


@dataclass
class RequestSequence:
    """One user's requests in time order (ties by object, then range start)."""

    user_id: str
    records: list[AccessRecord] = field(default_factory=list)

    @classmethod
    def from_records(cls, user_id: str, records) -> "RequestSequence":
        recs = sorted(records, key=record_sort_key)
        for r in recs:
            if r.user_id != user_id:
                raise ValueError(f"record for {r.user_id} in sequence of {user_id}")
        return cls(user_id, recs)


def group_by_user(records) -> dict[str, RequestSequence]:
    seqs: dict[str, list[AccessRecord]] = {}
    for r in records:
        seqs.setdefault(r.user_id, []).append(r)
    return {u: RequestSequence.from_records(u, rs) for u, rs in sorted(seqs.items())}


# ---------------------------------------------------------------------------
# Workload specification
# ---------------------------------------------------------------------------

@dataclass
class WorkloadSpec:
    """Targets and knobs for the synthetic trace generator.

    The volume mix is ordered (regular, real-time, overlapping) and must
    sum to 1.  When ``overlap_duplicate_fraction`` is set, the
    overlapping window length is derived from it so the measured
    duplicate share of overlapping transfers is exact.
    """

    n_users: int
    human_user_fraction: float
    program_volume_fraction: float
    type_volume_mix: tuple[float, float, float]
    duration: float
    catalog_size: int  # 0 sizes the catalog from the population
    spatial_correlation: float
    rng_seed: int
    overlap_duplicate_fraction: float | None = None
    data_rate: float = 5000.0

    # Program request shapes (period, window) in seconds; overridable.
    regular_period: int = 3600
    regular_window: int = 3600
    realtime_period: int = 60
    realtime_window: int = 60
    overlap_period: int = 3600
    overlap_window: int = 86400

    regular_set_size: int = 4
    overlap_set_size: int = 2
    realtime_pool_size: int = 12
    program_phase_range: tuple[float, float] = (0.25, 0.95)
    jitter_fraction: float = 0.0

    human_pool_size: int = 8
    human_users_per_pool: int = 65
    human_burst_objects: int = 6
    human_window_choices: tuple[int, ...] = (450, 600, 750, 900, 1200)
    human_think_range: tuple[int, int] = (45, 150)
    human_max_bursts: int = 3

    n_sites: int = 6
    n_instruments: int = 4

    def __post_init__(self):
        for name in ("human_user_fraction", "program_volume_fraction",
                     "spatial_correlation"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if abs(sum(self.type_volume_mix) - 1.0) > 1e-9:
            raise ValueError(
                f"type_volume_mix must sum to 1, got {sum(self.type_volume_mix)}"
            )
        if any(f < 0 for f in self.type_volume_mix):
            raise ValueError("type_volume_mix fractions must be non-negative")
        if self.n_users < 1:
            raise ValueError("n_users must be at least 1")
        if self.catalog_size < 0:
            raise ValueError("catalog_size must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.jitter_fraction < 0 or self.jitter_fraction > 0.01:
            raise ValueError("jitter_fraction must be in [0, 0.01]")
        if self.overlap_duplicate_fraction is not None:
            f = self.overlap_duplicate_fraction
            if not 0.0 < f < 1.0:
                raise ValueError("overlap_duplicate_fraction must be in (0, 1)")

    @property
    def effective_overlap_window(self) -> int:
        if self.overlap_duplicate_fraction is None:
            return self.overlap_window
        w = round(self.overlap_period / (1.0 - self.overlap_duplicate_fraction))
        if w <= self.overlap_period:
            raise ValueError("derived overlapping window not larger than period")
        return w


@dataclass
class _TypeShape:
    name: str
    period: int
    window: int
    set_size: int
    mix_index: int

    @property
    def bytes_per_user_second(self) -> float:
        # per unit data_rate
        return self.set_size * self.window / self.period


def _type_shapes(spec: WorkloadSpec) -> list[_TypeShape]:
    return [
        _TypeShape("regular", spec.regular_period, spec.regular_window,
                   spec.regular_set_size, 0),
        _TypeShape("realtime", spec.realtime_period, spec.realtime_window, 1, 1),
        _TypeShape("overlap", spec.overlap_period, spec.effective_overlap_window,
                   spec.overlap_set_size, 2),
    ]


def synthesize_trace(spec: WorkloadSpec) -> tuple[list[AccessRecord], Catalog]:
    """Build a calibrated workload; deterministic for a fixed rng_seed.

    Program users poll a fixed object set once per period, with the
    window aligned to the period boundary and the request fired a fixed
    per-user phase into the period.  Human users browse spatially
    correlated object pools in short bursts and never re-request an
    object, so the measured per-type mix stays on target.
    """
    rng = np.random.default_rng(spec.rng_seed)
    shapes = _type_shapes(spec)

    n_program = round(spec.n_users * (1.0 - spec.human_user_fraction))
    n_program = min(max(n_program, 0), spec.n_users)
    n_human = spec.n_users - n_program

    active_shapes = [s for s in shapes if spec.type_volume_mix[s.mix_index] > 0]
    if n_program > 0:
        for s in active_shapes:
            if (spec.duration - s.period) / s.period < 1:
                raise ValueError(
                    f"duration {spec.duration}s too short for one full "
                    f"{s.name} period of {s.period}s"
                )

    # Split program users across types so per-type volumes match the mix:
    # user-equivalents q_t are proportional to mix_t / per-user byte rate,
    # and each type emits requests until its byte budget is met, so the
    # measured mix does not drift with phase or boundary losses.
    weights = {}
    for s in active_shapes:
        weights[s.name] = spec.type_volume_mix[s.mix_index] / s.bytes_per_user_second
    wsum = sum(weights.values())
    user_equivalents = {
        s.name: (n_program * weights[s.name] / wsum if wsum > 0 else 0.0)
        for s in active_shapes
    }

    catalog, layout = _build_catalog(spec, user_equivalents)

    records: list[AccessRecord] = []
    program_volume = 0.0
    n_program_actual = 0
    for s in active_shapes:
        q = user_equivalents[s.name]
        if q <= 0:
            continue
        budget = q * s.bytes_per_user_second * spec.data_rate * spec.duration
        vol, emitted = _emit_program_users(spec, s, budget, layout, rng, records)
        program_volume += vol
        n_program_actual += emitted

    n_human = max(0, spec.n_users - n_program_actual)
    if n_human > 0:
        if n_program > 0 and spec.program_volume_fraction > 0:
            pvf = spec.program_volume_fraction
            human_target = program_volume * (1.0 - pvf) / pvf
        else:
            # No program traffic to anchor the split; give each human a
            # nominal two bursts.
            human_target = math.inf
        _emit_human_users(spec, n_human, human_target, layout, rng, records)

    records.sort(key=record_sort_key)
    return records, catalog


@dataclass
class _Layout:
    realtime_pool: list[str]
    program_sets: dict[str, list[str]]  # reserved ranges keyed by type name
    human_pools: list[list[str]]
    all_ids: list[str]
    neighbors: dict[str, list[str]]


def _build_catalog(spec: WorkloadSpec, user_equivalents) -> tuple[Catalog, _Layout]:
    shapes = {s.name: s for s in _type_shapes(spec)}
    # Two spare sets per type: the byte-budget loop may spill into an
    # extra user when phases eat into the usable span.
    n_reg = math.ceil(user_equivalents.get("regular", 0.0) - 1e-9) + 2
    n_ov = math.ceil(user_equivalents.get("overlap", 0.0) - 1e-9) + 2
    n_human = spec.n_users - round(spec.n_users * (1.0 - spec.human_user_fraction))
    n_pools = max(1, round(n_human / spec.human_users_per_pool)) if n_human else 0

    need = (spec.realtime_pool_size
            + n_reg * shapes["regular"].set_size
            + n_ov * shapes["overlap"].set_size
            + n_pools * spec.human_pool_size
            + 2 * n_pools)  # spill room next to each pool
    size = spec.catalog_size
    if size == 0:
        size = need + 48  # auto: population needs plus browse noise
    elif size < need:
        raise ValueError(
            f"catalog_size {size} too small; "
            f"workload needs at least {need} objects"
        )

    objects = []
    for k in range(size):
        objects.append(DataObject(
            object_id=f"obj{k:05d}",
            instrument_type_id=k % spec.n_instruments,
            location_id=k // spec.n_instruments,
            data_rate=spec.data_rate,
        ))
    catalog = Catalog(objects)
    ids = [o.object_id for o in objects]

    cursor = 0

    def take(n):
        nonlocal cursor
        chunk = ids[cursor:cursor + n]
        cursor += n
        return chunk

    realtime_pool = take(spec.realtime_pool_size)
    program_sets = {
        "regular": take(n_reg * shapes["regular"].set_size),
        "overlap": take(n_ov * shapes["overlap"].set_size),
    }
    human_pools = []
    for _ in range(n_pools):
        pool = take(spec.human_pool_size)
        take(2)  # leave spill objects adjacent to the pool
        human_pools.append(pool)

    # Neighbors by catalog position (adjacent locations on the grid).
    neighbors = {}
    for k, oid in enumerate(ids):
        lo = max(0, k - spec.n_instruments)
        hi = min(len(ids), k + spec.n_instruments + 1)
        neighbors[oid] = [ids[j] for j in range(lo, hi) if j != k]

    return catalog, _Layout(realtime_pool, program_sets, human_pools, ids, neighbors)


def _emit_program_users(spec, shape: _TypeShape, budget: float,
                        layout: _Layout, rng, records) -> tuple[float, int]:
    phase_lo, phase_hi = spec.program_phase_range
    volume = 0.0
    emitted = 0
    prefix = {"regular": "rg", "realtime": "rt", "overlap": "ov"}[shape.name]
    req_volume = shape.window * spec.data_rate
    max_users = len(layout.program_sets.get(shape.name, [])) // shape.set_size \
        if shape.name != "realtime" else spec.n_users

    # Real-time users share a small pool of hot streams; the other types
    # poll user-private object sets.
    if shape.name == "realtime":
        weights = np.array([1.0 / (i + 1) for i in range(len(layout.realtime_pool))])
        weights /= weights.sum()

    i = 0
    while volume < budget - req_volume / 2 and i < max_users:
        site = int(rng.integers(0, spec.n_sites))
        user_id = f"{prefix}{i:04d}.s{site}"
        phase = float(rng.uniform(phase_lo, phase_hi)) * shape.period
        if shape.name == "realtime":
            members = [str(rng.choice(layout.realtime_pool, p=weights))]
        else:
            base = i * shape.set_size
            members = layout.program_sets[shape.name][base:base + shape.set_size]
        i += 1

        jslack = spec.jitter_fraction * shape.period
        n_avail = int((spec.duration - phase - jslack) // shape.period) - 1
        if n_avail < 1:
            continue
        emitted += 1

        done = False
        for k in range(1, 1 + n_avail):
            ts = k * shape.period + phase
            if spec.jitter_fraction > 0:
                ts += float(rng.uniform(-jslack, jslack))
            w_end = k * shape.period
            w_start = w_end - shape.window
            for oid in members:
                records.append(AccessRecord(ts, user_id, oid, w_start, w_end))
                volume += req_volume
                if volume >= budget:
                    done = True
                    break
            if done:
                break
    return volume, emitted


def _emit_human_users(spec, n_human: int, target_volume: float, layout: _Layout,
                      rng, records) -> float:
    if not layout.human_pools:
        return 0.0
    users = []
    for i in range(n_human):
        pool_idx = int(rng.integers(0, len(layout.human_pools)))
        site = pool_idx % spec.n_sites
        if rng.random() > 0.7:
            site = int(rng.integers(0, spec.n_sites))
        start = float(rng.uniform(60.0, 0.55 * spec.duration))
        users.append({
            "id": f"hu{i:04d}.s{site}",
            "pool": pool_idx,
            "next_ts": start,
            "requested": set(),
            "rng": np.random.default_rng(rng.integers(0, 2**63 - 1)),
        })

    volume = 0.0
    think_lo, think_hi = spec.human_think_range
    if target_volume == math.inf:
        max_rounds = 2
    else:
        max_rounds = spec.human_max_bursts
    for _ in range(max_rounds):
        for u in users:
            if volume >= target_volume and target_volume != math.inf:
                return volume
            urng = u["rng"]
            t = u["next_ts"]
            if t >= spec.duration - 600:
                continue
            window = int(urng.choice(spec.human_window_choices))
            obs_end = int(t)
            pool = layout.human_pools[u["pool"]]
            for _pick in range(spec.human_burst_objects):
                oid = _pick_human_object(spec, u, pool, layout, urng)
                if oid is None:
                    break
                u["requested"].add(oid)
                records.append(AccessRecord(
                    t, u["id"], oid, obs_end - window, obs_end))
                volume += window * spec.data_rate
                t += float(urng.integers(think_lo, think_hi + 1))
                if t >= spec.duration:
                    break
            u["next_ts"] = t + float(urng.uniform(0.1, 0.3)) * spec.duration
    return volume


def _pick_human_object(spec, user, pool, layout: _Layout, urng):
    in_pool = urng.random() < spec.spatial_correlation
    if in_pool:
        fresh = [o for o in pool if o not in user["requested"]]
        if not fresh:
            # Spill into adjacent locations once the pool is exhausted.
            adjacent = set()
            for o in pool:
                adjacent.update(layout.neighbors[o])
            fresh = sorted(o for o in adjacent if o not in user["requested"])
        if fresh:
            return str(fresh[int(urng.integers(0, len(fresh)))])
    for _ in range(8):
        oid = layout.all_ids[int(urng.integers(0, len(layout.all_ids)))]
        if oid not in user["requested"]:
            return oid
    return None


# ---------------------------------------------------------------------------
# Traffic rescaling
# ---------------------------------------------------------------------------

def scale_traffic(records: list[AccessRecord], factor: float) -> list[AccessRecord]:
    """Compress (factor > 1) or stretch (factor < 1) request arrival times.

    Timestamps map to t0 + (ts - t0) / factor; observation windows are
    untouched.
    """
    if factor <= 0:
        raise ValueError(f"traffic factor must be positive, got {factor}")
    if any(records[i].ts > records[i + 1].ts for i in range(len(records) - 1)):
        raise ValueError("records must be sorted by ts")
    if not records or factor == 1:
        return list(records)
    t0 = records[0].ts
    return [replace(r, ts=t0 + (r.ts - t0) / factor) for r in records]


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _format_ts(ts: float) -> str:
    return str(int(ts)) if ts == int(ts) else repr(ts)


def write_trace(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in records:
            fh.write(f"{_format_ts(r.ts)},{r.user_id},{r.object_id},"
                     f"{r.range_start},{r.range_end}\n")


def parse_trace(path, catalog: Catalog) -> list[AccessRecord]:
    """Read a trace file; rejects unknown objects and malformed lines.

    Unsorted input is sorted rather than rejected.
    """
    path = Path(path)
    records = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        return []
    if lines[0].strip() != TRACE_HEADER:
        raise TraceFormatError(path, 1, f"expected header '{TRACE_HEADER}'")
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise TraceFormatError(path, line_no, f"expected 5 fields, got {len(parts)}")
        try:
            ts = float(parts[0])
            start, end = int(parts[3]), int(parts[4])
        except ValueError as exc:
            raise TraceFormatError(path, line_no, str(exc)) from None
        if parts[2] not in catalog:
            raise TraceFormatError(path, line_no, f"unknown object_id {parts[2]!r}")
        try:
            records.append(AccessRecord(ts, parts[1], parts[2], start, end))
        except ValueError as exc:
            raise TraceFormatError(path, line_no, str(exc)) from None
    records.sort(key=record_sort_key)
    return records


def write_catalog(path, catalog: Catalog) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CATALOG_HEADER + "\n")
        for obj in catalog:
            fh.write(f"{obj.object_id},{obj.instrument_type_id},"
                     f"{obj.location_id},{repr(obj.data_rate)}\n")


def parse_catalog(path) -> Catalog:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        return Catalog([])
    if lines[0].strip() != CATALOG_HEADER:
        raise TraceFormatError(path, 1, f"expected header '{CATALOG_HEADER}'")
    objects = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TraceFormatError(path, line_no, f"expected 4 fields, got {len(parts)}")
        try:
            objects.append(DataObject(parts[0], int(parts[1]), int(parts[2]),
                                      float(parts[3])))
        except ValueError as exc:
            raise TraceFormatError(path, line_no, str(exc)) from None
    return Catalog(objects)


def home_site(user_id: str, n_sites: int) -> int:
    """Stable user -> site mapping; honors the '.s<k>' hint in generated ids."""
    if ".s" in user_id:
        tail = user_id.rsplit(".s", 1)[1]
        if tail.isdigit():
            return int(tail) % n_sites
    return sum(user_id.encode()) % n_sites
