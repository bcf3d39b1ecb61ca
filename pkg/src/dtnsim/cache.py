"""Interval-indexed cache of (object, time-range) segments per DTN.

Each cached segment is one coalesced observation-time interval of one
object.  Eviction is whole-segment, least-recently-used or
least-frequently-used; lookups return exact partial hits.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field

from . import intervals
from .intervals import Interval, IntervalSet


class CachePolicy(enum.Enum):
    LRU = "lru"
    LFU = "lfu"

    @classmethod
    def parse(cls, value) -> "CachePolicy":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass
class LookupResult:
    hit: IntervalSet
    miss: IntervalSet
    bytes_hit: float
    bytes_miss: float


class _Segment:
    __slots__ = ("object_id", "start", "end", "size", "last_access_ts",
                 "access_count", "seq", "stamp", "alive")

    def __init__(self, object_id, start, end, size, now, count, seq):
        self.object_id = object_id
        self.start = start
        self.end = end
        self.size = size
        self.last_access_ts = now
        self.access_count = count
        self.seq = seq
        self.stamp = 0
        self.alive = True

    @property
    def interval(self) -> Interval:
        return (self.start, self.end)


class CacheStore:
    """One DTN's cache.  All sizes are in bytes."""

    def __init__(self, capacity: float, policy: CachePolicy = CachePolicy.LRU):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = float(capacity)
        self.policy = CachePolicy.parse(policy)
        self.used = 0.0
        self._segments: dict[str, list[_Segment]] = {}
        self._heap: list = []
        self._seq = 0

    # -- bookkeeping --------------------------------------------------

    def _key(self, seg: _Segment):
        if self.policy is CachePolicy.LRU:
            return (seg.last_access_ts, seg.seq)
        return (seg.access_count, seg.last_access_ts, seg.seq)

    def _push(self, seg: _Segment):
        seg.stamp += 1
        heapq.heappush(self._heap, (self._key(seg), seg.stamp, seg))

    def _touch(self, seg: _Segment, now: float):
        seg.last_access_ts = max(seg.last_access_ts, now)
        seg.access_count += 1
        self._push(seg)

    def object_intervals(self, object_id: str) -> IntervalSet:
        return [s.interval for s in self._segments.get(object_id, ())]

    def content_index(self) -> dict[str, IntervalSet]:
        """Read-only snapshot of cached intervals, for peer planning."""
        return {obj: [s.interval for s in segs]
                for obj, segs in self._segments.items() if segs}

    # -- operations ---------------------------------------------------

    def lookup(self, object_id: str, tr: Interval, now: float = 0.0,
               rate: float = 1.0) -> LookupResult:
        """Exact interval intersection; touches matched segments."""
        if tr[0] >= tr[1]:
            raise ValueError("empty lookup range")
        requested = [tr]
        segs = self._segments.get(object_id, ())
        hit: IntervalSet = []
        for seg in segs:
            if seg.end <= tr[0] or seg.start >= tr[1]:
                continue
            hit.append((max(seg.start, tr[0]), min(seg.end, tr[1])))
            self._touch(seg, now)
        hit = intervals.normalize(hit)
        miss = intervals.subtract(requested, hit)
        return LookupResult(hit, miss, intervals.measure(hit) * rate,
                            intervals.measure(miss) * rate)

    def insert(self, object_id: str, tr: Interval, now: float,
               rate: float = 1.0) -> list[tuple[str, Interval]]:
        """Cache a fetched range; returns evicted (object, interval) pairs.

        The incoming range coalesces with adjacent or overlapping
        segments of the same object; the merged segment takes the newest
        recency and the summed access count.
        """
        if tr[0] >= tr[1]:
            raise ValueError("empty insert range")
        if (tr[1] - tr[0]) * rate > self.capacity:
            raise ValueError(
                f"segment of {(tr[1] - tr[0]) * rate:.0f} bytes exceeds "
                f"cache capacity {self.capacity:.0f}")

        evicted: list[tuple[str, Interval]] = []
        while True:
            added = intervals.subtract([tr], self.object_intervals(object_id))
            need = intervals.measure(added) * rate
            if self.used + need <= self.capacity + 1e-9:
                break
            victim = self._pop_victim()
            if victim is None:
                break
            self._remove(victim)
            evicted.append((victim.object_id, victim.interval))
        if not added:
            return evicted

        # Merge with surviving neighbours.
        partners = []
        rest = []
        for seg in self._segments.get(object_id, []):
            if seg.start <= tr[1] and seg.end >= tr[0]:
                partners.append(seg)
            else:
                rest.append(seg)
        start = min([tr[0]] + [s.start for s in partners])
        end = max([tr[1]] + [s.end for s in partners])
        count = 1 + sum(s.access_count for s in partners)
        last = max([now] + [s.last_access_ts for s in partners])
        for seg in partners:
            seg.alive = False
            self.used -= seg.size
        self._seq += 1
        merged = _Segment(object_id, start, end, (end - start) * rate,
                          last, count, self._seq)
        rest.append(merged)
        rest.sort(key=lambda s: s.start)
        self._segments[object_id] = rest
        self.used += merged.size
        self._push(merged)
        return evicted

    def _pop_victim(self) -> _Segment | None:
        while self._heap:
            key, stamp, seg = heapq.heappop(self._heap)
            if seg.alive and seg.stamp == stamp:
                return seg
        return None

    def _remove(self, seg: _Segment):
        seg.alive = False
        self.used -= seg.size
        segs = self._segments.get(seg.object_id, [])
        self._segments[seg.object_id] = [s for s in segs if s is not seg]

    def dump(self) -> str:
        """Cache contents as delimited text for debugging."""
        lines = []
        for obj in sorted(self._segments):
            for seg in self._segments[obj]:
                lines.append(f"{obj},{seg.start},{seg.end},{seg.size!r},"
                             f"{seg.last_access_ts!r},{seg.access_count}")
        return "\n".join(lines)


def plan_sources(miss: IntervalSet, object_id: str,
                 peers: list[tuple[int, dict]], peer_throughput,
                 origin_throughput: float) -> list[tuple[Interval, int | None]]:
    """Assign each missing sub-interval to the cheapest source.

    `peers` pairs a DTN id with a content index snapshot, in id order;
    `peer_throughput(dtn_id)` and `origin_throughput` are in Gbps.  A
    sub-interval goes to the peer with the highest throughput holding it
    (ties to the lower id), or to the origin (id None) when no peer
    beats the origin path.  Returns coalesced (interval, source) pieces.
    """
    if not miss:
        return []
    holdings = []
    for dtn_id, index in sorted(peers, key=lambda p: p[0]):
        held = intervals.intersect(miss, index.get(object_id, []))
        if held:
            holdings.append((dtn_id, peer_throughput(dtn_id), held))

    bounds = set()
    for s, e in miss:
        bounds.update((s, e))
    for _, _, held in holdings:
        for s, e in held:
            bounds.update((s, e))
    cuts = sorted(bounds)

    pieces: list[tuple[Interval, int | None]] = []
    for s, e in zip(cuts, cuts[1:]):
        if not intervals.intersect(miss, [(s, e)]):
            continue
        best_src: int | None = None
        best_tp = origin_throughput
        for dtn_id, tput, held in holdings:
            if intervals.contains(held, [(s, e)]) and tput > best_tp:
                best_src, best_tp = dtn_id, tput
        if pieces and pieces[-1][1] == best_src and pieces[-1][0][1] == s:
            pieces[-1] = ((pieces[-1][0][0], e), best_src)
        else:
            pieces.append(((s, e), best_src))
    return pieces
