"""Deterministic discrete-event simulation of the DTN delivery network.

One server DTN fronts the observatory with a FIFO task queue and a
fixed pool of service workers; client DTNs hold interval caches and
serve their local users over a fast access link.  Transfers between
DTNs share port bandwidth fairly and are re-timed whenever the set of
active transfers changes.  Requests resolve local cache, then peers,
then the origin; the push engine adds prefetch, streaming, and hot-data
replication on top, depending on the strategy.
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import intervals
from .cache import CachePolicy, CacheStore, plan_sources
from .classifier import ClassifierConfig, OnlineClassifier, RequestClass
from .placement import (HubSelectionInputs, UserInterestVector, cluster_users,
                        replicate_hot, select_hub)
from .prediction.mining import MinerConfig, mine_rules
from .prediction.models import (DEFAULT_PERIOD, MarkovModel, PredictorConfig,
                                history_plan, predict_by_rules, timed_plan)
from .streaming import StreamManager
from .trace import Catalog, home_site, scale_traffic

GBPS = 1e9 / 8.0  # bytes per second per Gbps


class Strategy(enum.Enum):
    NO_CACHE = "nocache"
    CACHE_ONLY = "cacheonly"
    MD1 = "md1"
    MD2 = "md2"
    HPM = "hpm"

    @classmethod
    def parse(cls, value) -> "Strategy":
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown strategy {value!r}")

    @property
    def uses_cache(self) -> bool:
        return self is not Strategy.NO_CACHE

    @property
    def predictive(self) -> bool:
        return self in (Strategy.MD1, Strategy.MD2, Strategy.HPM)


NETWORK_CONDITIONS = {"best": 1.0, "medium": 0.5, "worst": 0.01}


@dataclass(frozen=True)
class DTNode:
    dtn_id: int
    role: str  # "server" | "client"
    port_gbps: float
    cache_capacity: float = 0.0


@dataclass
class Topology:
    nodes: list[DTNode]
    user_link_gbps: float = 100.0
    condition: str = "best"

    def __post_init__(self):
        servers = [n for n in self.nodes if n.role == "server"]
        if len(servers) != 1:
            raise ValueError("topology needs exactly one server DTN")
        self.server_id = servers[0].dtn_id
        self.client_ids = sorted(n.dtn_id for n in self.nodes if n.role == "client")
        if not self.client_ids:
            raise ValueError("topology needs at least one client DTN")
        for n in self.nodes:
            if n.port_gbps <= 0:
                raise ValueError(f"DTN {n.dtn_id} has no bandwidth")
            if n.role == "client" and not 10.0 <= n.port_gbps <= 40.0:
                raise ValueError(
                    f"client DTN {n.dtn_id} port {n.port_gbps} Gbps outside "
                    "the 10-40 Gbps range")
        if self.condition not in NETWORK_CONDITIONS:
            raise ValueError(f"unknown network condition {self.condition!r}")
        self._ports = {n.dtn_id: n.port_gbps for n in self.nodes}

    @property
    def condition_scale(self) -> float:
        return NETWORK_CONDITIONS[self.condition]

    def port(self, dtn_id: int) -> float:
        return self._ports[dtn_id]

    def bandwidth(self, i: int, j: int) -> float:
        """Pairwise link capacity: the slower of the two ports."""
        if i == j:
            raise ValueError("no self links")
        return min(self._ports[i], self._ports[j])

    def capacity(self, dtn_id: int) -> float:
        for n in self.nodes:
            if n.dtn_id == dtn_id:
                return n.cache_capacity
        raise KeyError(dtn_id)

    def home_dtn(self, user_id: str) -> int:
        return self.client_ids[home_site(user_id, len(self.client_ids))]


def default_topology(server_port_gbps: float = 40.0,
                     client_ports=(40.0, 35.0, 30.0, 20.0, 15.0, 10.0),
                     cache_capacity: float = 0.0,
                     user_link_gbps: float = 100.0,
                     condition: str = "best") -> Topology:
    """Seven-node layout: DTN 1 serves the observatory, 2..7 are clients."""
    nodes = [DTNode(1, "server", server_port_gbps)]
    for i, port in enumerate(client_ports):
        nodes.append(DTNode(2 + i, "client", port, cache_capacity))
    return Topology(nodes, user_link_gbps=user_link_gbps, condition=condition)


def effective_throughput(port_src_gbps: float, n_src: int,
                         port_dst_gbps: float, n_dst: int,
                         condition_scale: float = 1.0) -> float:
    """Fair-share throughput in Gbps for one transfer on a src/dst port pair."""
    if port_src_gbps <= 0 or port_dst_gbps <= 0:
        raise ValueError("disconnected pair")
    return min(port_src_gbps / max(n_src, 1),
               port_dst_gbps / max(n_dst, 1)) * condition_scale


@dataclass
class SimParams:
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    miner: MinerConfig = field(default_factory=MinerConfig)
    mining_interval: float = 86400.0
    rebalance_interval: float = 7 * 86400.0
    kmeans_k: int | None = None
    replication_budget_fraction: float = 0.10
    stream_idle_periods: float = 10.0
    origin_workers: int = 10


@dataclass
class CacheSetup:
    capacity: float
    policy: CachePolicy = CachePolicy.LRU

    def __post_init__(self):
        self.policy = CachePolicy.parse(self.policy)


class OriginQueue:
    """FIFO task queue in front of a fixed pool of service workers."""

    def __init__(self, n_workers: int = 10):
        self.n_workers = n_workers
        self.in_service = 0
        self.pending: deque = deque()
        self.latencies: list[float] = []

    def submit(self, now: float, payload):
        """Returns the payload if a worker picks it up immediately."""
        if self.in_service < self.n_workers:
            self.in_service += 1
            self.latencies.append(0.0)
            return payload
        self.pending.append((now, payload))
        return None

    def release(self, now: float):
        """Worker finished; returns the next task to start, if any."""
        self.in_service -= 1
        if not self.pending:
            return None
        submit_ts, payload = self.pending.popleft()
        self.in_service += 1
        self.latencies.append(now - submit_ts)
        return payload


@dataclass
class SimReport:
    strategy: str
    cache_policy: str
    cache_capacity: float
    condition: str
    traffic_factor: float
    seed: int
    n_requests: int = 0
    total_bytes: float = 0.0
    origin_requests: int = 0
    normalized_origin_requests: float = 0.0
    latency_mean: float = 0.0
    latency_p50: float = 0.0
    latency_p95: float = 0.0
    latency_p99: float = 0.0
    throughput_mean_mbps: float = 0.0
    bytes_local: float = 0.0
    bytes_peer: float = 0.0
    bytes_origin: float = 0.0
    bytes_prefetch: float = 0.0
    bytes_stream: float = 0.0
    local_access_fraction: float = 0.0
    full_local_requests: int = 0
    prefetched_bytes: float = 0.0
    prefetch_consumed_bytes: float = 0.0
    prefetch_recall: float | None = None
    prefetch_waste_wrong: float = 0.0
    prefetch_waste_late: float = 0.0
    prefetch_waste_evicted: float = 0.0
    stream_origin_reads: int = 0
    stream_origin_bytes: float = 0.0
    origin_bytes_total: float = 0.0
    replicate_bytes: float = 0.0

    FIELDS = ("strategy", "cache_policy", "cache_capacity", "condition",
              "traffic_factor", "seed", "n_requests", "total_bytes",
              "origin_requests", "normalized_origin_requests",
              "latency_mean", "latency_p50", "latency_p95", "latency_p99",
              "throughput_mean_mbps", "bytes_local", "bytes_peer",
              "bytes_origin", "bytes_prefetch", "bytes_stream",
              "local_access_fraction", "full_local_requests",
              "prefetched_bytes", "prefetch_consumed_bytes", "prefetch_recall",
              "prefetch_waste_wrong", "prefetch_waste_late",
              "prefetch_waste_evicted", "stream_origin_reads",
              "stream_origin_bytes", "origin_bytes_total", "replicate_bytes")

    def to_row(self) -> list[str]:
        out = []
        for name in self.FIELDS:
            v = getattr(self, name)
            if v is None:
                out.append("na")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def _percentile(sorted_vals: list[float], q: float) -> float:
    if not sorted_vals:
        return 0.0
    idx = min(len(sorted_vals) - 1, max(0, math.ceil(q * len(sorted_vals)) - 1))
    return sorted_vals[idx]


class _Transfer:
    __slots__ = ("tid", "src", "dst", "object_id", "pieces", "remaining",
                 "rate", "purpose", "last_update", "version", "waiters",
                 "ledger", "is_origin_task", "bytes_total")

    def __init__(self, tid, src, dst, object_id, pieces, total, purpose):
        self.tid = tid
        self.src = src
        self.dst = dst
        self.object_id = object_id
        self.pieces = pieces
        self.bytes_total = total
        self.remaining = total
        self.rate = 0.0
        self.purpose = purpose
        self.last_update = 0.0
        self.version = 0
        self.waiters: list = []
        self.ledger = None
        self.is_origin_task = False


class _Pending:
    __slots__ = ("rec", "total_bytes", "parts", "ready", "credited")

    def __init__(self, rec, total_bytes, now):
        self.rec = rec
        self.total_bytes = total_bytes
        self.parts = 0
        self.ready = now
        self.credited = 0.0


class _LedgerEntry:
    __slots__ = ("bytes", "consumed", "late", "evicted", "predicted_ts")

    def __init__(self, nbytes, predicted_ts):
        self.bytes = nbytes
        self.consumed = 0.0
        self.late = 0.0
        self.evicted = 0.0
        self.predicted_ts = predicted_ts


# Event kinds, ordered only by (time, seq).
_XFER_END = 0
_PREFETCH = 1
_STREAM_TICK = 2
_MINE = 3
_REBALANCE = 4


class Engine:
    def __init__(self, records, catalog: Catalog, topology: Topology,
                 strategy: Strategy, cache: CacheSetup, params: SimParams,
                 seed: int, traffic_factor: float):
        self.records = records
        self.catalog = catalog
        self.topo = topology
        self.strategy = strategy
        self.cache_setup = cache
        self.params = params
        self.seed = seed
        self.factor = traffic_factor
        self.t0 = records[0].ts if records else 0.0

        self.now = self.t0
        self.heap: list = []
        self.seq = 0
        self.transfers_active: set[_Transfer] = set()
        self.port_load: dict[int, int] = {n.dtn_id: 0 for n in topology.nodes}
        self.queue = OriginQueue(params.origin_workers)
        self.tid = 0

        self.stores: dict[int, CacheStore] = {}
        if strategy.uses_cache:
            for cid in topology.client_ids:
                self.stores[cid] = CacheStore(cache.capacity, cache.policy)

        # provenance per (dtn, object): sticky prefetch/stream ranges plus
        # unconsumed prefetch pieces pointing at ledger entries
        self.prov_prefetch: dict[tuple, list] = {}
        self.prov_stream: dict[tuple, list] = {}
        self.unconsumed: dict[tuple, list] = {}   # [start, end, entry]
        self.inflight: dict[tuple, list[_Transfer]] = {}

        self.ledger: list[_LedgerEntry] = []
        self.streams = StreamManager(params.stream_idle_periods)
        self.online = OnlineClassifier(params.classifier, history_start=self.t0)

        # predictor state
        self.obj_history: dict[tuple, deque] = {}
        self.sessions: dict[str, tuple[float, set]] = {}
        self.last_two: dict[str, list] = {}
        self.markov = MarkovModel()
        self.prev_obj: dict[str, str] = {}
        self.transactions: list[frozenset] = []
        self.rules = None

        # placement epoch state
        self.epoch_user_counts: dict[str, dict[str, int]] = {}
        self.epoch_obj_ranges: dict[str, list] = {}
        self.epoch_index = 0
        self.groups = []
        self.group_rows: list[tuple] = []

        # metrics
        self.n_requests = 0
        self.total_bytes = 0.0
        self.origin_requests = 0
        self.bytes_by_source = {"local": 0.0, "peer": 0.0, "origin": 0.0,
                                "prefetch": 0.0, "stream": 0.0}
        self.throughputs: list[float] = []
        self.full_local = 0
        self.demand_origin_bytes = 0.0
        self.prefetch_origin_bytes = 0.0
        self.replicate_origin_bytes = 0.0
        self.replicate_bytes = 0.0

    # -- time axes ----------------------------------------------------

    def obs_available(self, wall: float) -> float:
        """Observation time ingested by the origin at wall-clock `wall`."""
        return self.t0 + (wall - self.t0) * self.factor

    def wall_of_obs(self, obs: float) -> float:
        return self.t0 + (obs - self.t0) / self.factor

    # -- event plumbing -------------------------------------------------

    def _schedule(self, time: float, kind: int, payload):
        self.seq += 1
        heapq.heappush(self.heap, (time, self.seq, kind, payload))

    # -- transfer engine ------------------------------------------------

    def _share(self, t: _Transfer) -> float:
        return effective_throughput(
            self.topo.port(t.src), self.port_load[t.src],
            self.topo.port(t.dst), self.port_load[t.dst],
            self.topo.condition_scale) * GBPS

    def _retime(self, now: float):
        for t in self.transfers_active:
            if t.rate > 0:
                t.remaining -= t.rate * (now - t.last_update)
                if t.remaining < 0:
                    t.remaining = 0.0
            t.last_update = now
        for t in self.transfers_active:
            t.rate = self._share(t)
            t.version += 1
            end = now + (t.remaining / t.rate if t.rate > 0 else math.inf)
            self._schedule(end, _XFER_END, (t, t.version))

    def _start_transfer(self, src, dst, object_id, pieces, purpose,
                        total=None) -> _Transfer:
        rate = self.catalog.rate(object_id)
        if total is None:
            total = intervals.measure(pieces) * rate
        self.tid += 1
        t = _Transfer(self.tid, src, dst, object_id, pieces, total, purpose)
        t.last_update = self.now
        self.transfers_active.add(t)
        self.port_load[src] += 1
        self.port_load[dst] += 1
        if purpose in ("prefetch", "stream", "replicate", "origin", "peer"):
            self.inflight.setdefault((dst, object_id), []).append(t)
        self._retime(self.now)
        return t

    def _finish_transfer(self, t: _Transfer):
        self.transfers_active.discard(t)
        self.port_load[t.src] -= 1
        self.port_load[t.dst] -= 1
        lst = self.inflight.get((t.dst, t.object_id))
        if lst is not None:
            lst[:] = [x for x in lst if x is not t]
            if not lst:
                del self.inflight[(t.dst, t.object_id)]
        self._retime(self.now)

        if self.strategy.uses_cache and t.dst in self.stores:
            self._insert_into_cache(t)
        for pend, ivals in t.waiters:
            nbytes = intervals.measure(ivals) * self.catalog.rate(t.object_id)
            source = {"origin": "origin", "peer": "peer",
                      "prefetch": "prefetch", "stream": "stream",
                      "replicate": "local"}[t.purpose]
            self._credit(pend, nbytes, source)
            if t.purpose == "prefetch" and t.ledger is not None:
                # Delivered after the request needed it: late waste.
                t.ledger.late += nbytes
                self._consume_unconsumed(t.dst, t.object_id, ivals, credit=False)
            pend.parts -= 1
            pend.ready = max(pend.ready, self.now)
            if pend.parts == 0:
                self._finalize_request(pend)
        if t.is_origin_task:
            nxt = self.queue.release(self.now)
            if nxt is not None:
                self._start_origin_task(nxt)

    def _insert_into_cache(self, t: _Transfer):
        store = self.stores[t.dst]
        rate = self.catalog.rate(t.object_id)
        key = (t.dst, t.object_id)
        for piece in t.pieces:
            evicted = store.insert(t.object_id, piece, self.now, rate)
            for obj, ival in evicted:
                self._on_evicted(t.dst, obj, ival)
            if t.purpose == "prefetch":
                self.prov_prefetch[key] = intervals.union(
                    self.prov_prefetch.get(key, []), [piece])
                if t.ledger is not None:
                    self.unconsumed.setdefault(key, []).append(
                        [piece[0], piece[1], t.ledger])
            elif t.purpose == "stream":
                self.prov_stream[key] = intervals.union(
                    self.prov_stream.get(key, []), [piece])

    def _on_evicted(self, dtn, object_id, ival):
        key = (dtn, object_id)
        if key in self.prov_prefetch:
            self.prov_prefetch[key] = intervals.subtract(
                self.prov_prefetch[key], [ival])
        if key in self.prov_stream:
            self.prov_stream[key] = intervals.subtract(
                self.prov_stream[key], [ival])
        bucket = self.unconsumed.get(key)
        if bucket:
            rate = self.catalog.rate(object_id)
            keep = []
            for s, e, entry in bucket:
                lost = intervals.intersect([(s, e)], [ival])
                for ls, le in lost:
                    entry.evicted += (le - ls) * rate
                for rs, re_ in intervals.subtract([(s, e)], [ival]):
                    keep.append([rs, re_, entry])
            self.unconsumed[key] = keep

    def _consume_unconsumed(self, dtn, object_id, ivals, credit: bool):
        bucket = self.unconsumed.get((dtn, object_id))
        if not bucket:
            return
        rate = self.catalog.rate(object_id)
        keep = []
        for s, e, entry in bucket:
            used = intervals.intersect([(s, e)], ivals)
            for us, ue in used:
                if credit:
                    entry.consumed += (ue - us) * rate
            for rs, re_ in intervals.subtract([(s, e)], ivals):
                keep.append([rs, re_, entry])
        self.unconsumed[(dtn, object_id)] = keep

    # -- origin queue -----------------------------------------------------

    def _submit_origin(self, pend: _Pending, pieces):
        self.origin_requests += 1
        pend.parts += 1
        task = (pend, pieces)
        started = self.queue.submit(self.now, task)
        if started is not None:
            self._start_origin_task(started)

    def _start_origin_task(self, task):
        pend, pieces = task
        rate = self.catalog.rate(pend.rec.object_id)
        total = intervals.measure(pieces) * rate
        self.demand_origin_bytes += total
        t = self._start_transfer(self.topo.server_id,
                                 self.topo.home_dtn(pend.rec.user_id),
                                 pend.rec.object_id, pieces, "origin", total)
        t.is_origin_task = True
        t.waiters.append((pend, pieces))

    # -- request resolution -------------------------------------------------

    def _credit(self, pend: _Pending, nbytes: float, source: str):
        pend.credited += nbytes
        self.bytes_by_source[source] += nbytes

    def _finalize_request(self, pend: _Pending):
        if not math.isclose(pend.credited, pend.total_bytes,
                            rel_tol=1e-6, abs_tol=1.0):
            raise RuntimeError(
                f"byte conservation broken: credited {pend.credited} of "
                f"{pend.total_bytes} for {pend.rec}")
        user_rate = self.topo.user_link_gbps * GBPS
        delivery_end = pend.ready + pend.total_bytes / user_rate
        elapsed = delivery_end - pend.rec.ts
        self.throughputs.append(pend.total_bytes * 8.0 / elapsed / 1e6)

    def _on_request(self, rec):
        self.n_requests += 1
        rate = self.catalog.rate(rec.object_id)
        total = rec.window_seconds * rate
        self.total_bytes += total
        pend = _Pending(rec, total, self.now)

        if not self.strategy.uses_cache:
            self._submit_origin(pend, [rec.tr])
            self._after_serve(rec, RequestClass.UNCLASSIFIED)
            return

        home = self.topo.home_dtn(rec.user_id)
        store = self.stores[home]
        res = store.lookup(rec.object_id, rec.tr, self.now, rate)
        if res.hit:
            key = (home, rec.object_id)
            pf = intervals.intersect(res.hit, self.prov_prefetch.get(key, []))
            st = intervals.intersect(res.hit, self.prov_stream.get(key, []))
            pf_bytes = intervals.measure(pf) * rate
            st_bytes = intervals.measure(st) * rate
            plain = res.bytes_hit - pf_bytes - st_bytes
            if pf_bytes:
                self._credit(pend, pf_bytes, "prefetch")
                self._consume_unconsumed(home, rec.object_id, pf, credit=True)
            if st_bytes:
                self._credit(pend, st_bytes, "stream")
            if plain:
                self._credit(pend, plain, "local")
        miss = res.miss

        if miss:
            for t in self.inflight.get((home, rec.object_id), ()):
                overlap = intervals.intersect(miss, t.pieces)
                if overlap:
                    t.waiters.append((pend, overlap))
                    pend.parts += 1
                    miss = intervals.subtract(miss, overlap)
                    if not miss:
                        break

        if miss:
            peers = []
            for cid in self.topo.client_ids:
                if cid == home:
                    continue
                held = self.stores[cid].object_intervals(rec.object_id)
                if held:
                    peers.append((cid, {rec.object_id: held}))
            scale = self.topo.condition_scale
            pieces = plan_sources(
                miss, rec.object_id, peers,
                lambda d: self.topo.bandwidth(d, home) * scale,
                self.topo.bandwidth(self.topo.server_id, home) * scale)
            origin_parts = []
            by_peer: dict[int, list] = {}
            for ival, src in pieces:
                if src is None:
                    origin_parts.append(ival)
                else:
                    by_peer.setdefault(src, []).append(ival)
            for src in sorted(by_peer):
                ivals = by_peer[src]
                # A peer read refreshes the peer's own recency metadata.
                for ival in ivals:
                    self.stores[src].lookup(rec.object_id, ival, self.now, rate)
                t = self._start_transfer(src, home, rec.object_id, ivals, "peer")
                t.waiters.append((pend, ivals))
                pend.parts += 1
            if origin_parts:
                self._submit_origin(pend, origin_parts)

        if pend.parts == 0:
            self.full_local += 1
            self._finalize_request(pend)

        cls = RequestClass.UNCLASSIFIED
        if self.strategy.predictive:
            cls, _fresh, _dup = self.online.observe(rec)
        self._after_serve(rec, cls)

    # -- prediction and push engine ------------------------------------------

    def _after_serve(self, rec, cls: RequestClass):
        if not self.strategy.predictive:
            return
        user = rec.user_id
        obj = rec.object_id
        now = self.now

        hist = self.obj_history.setdefault((user, obj), deque(
            maxlen=self.params.predictor.arima_window + 1))
        hist.append(rec.ts)

        # session bookkeeping for mining context
        gap = self.params.miner.session_gap
        last_ts, sess = self.sessions.get(user, (None, None))
        if last_ts is None or rec.ts - last_ts > gap:
            if sess:
                self.transactions.append(frozenset(sess))
            sess = set()
        sess.add(obj)
        self.sessions[user] = (rec.ts, sess)

        pair = self.last_two.setdefault(user, [])
        pair.append(rec)
        if len(pair) > 2:
            pair.pop(0)

        prev_o = self.prev_obj.get(user)
        if prev_o is not None:
            self.markov.observe(prev_o, obj)
        self.prev_obj[user] = obj

        # placement accounting
        counts = self.epoch_user_counts.setdefault(user, {})
        counts[obj] = counts.get(obj, 0) + 1
        self.epoch_obj_ranges[obj] = intervals.union(
            self.epoch_obj_ranges.get(obj, []), [rec.tr])

        # streaming promotion for real-time polling (all push strategies)
        if cls is RequestClass.REAL_TIME:
            self.streams.note_activity(user, obj, now)
            streak = self.online.realtime_streak(user, obj)
            if streak >= self.params.classifier.program_repeat_threshold:
                sub = self.streams.subscriptions.get(obj)
                is_member = sub is not None and user in sub.subscribers
                if not is_member:
                    period_wall = self.online.observed_period(user, obj) or 60.0
                    period_obs = max(1.0, period_wall * self.factor)
                    avail = self.obs_available(now)
                    new_sub = sub is None
                    sub = self.streams.promote(user, obj,
                                               self.topo.home_dtn(user),
                                               period_obs, now, avail)
                    if new_sub:
                        self._schedule_tick(sub, sub.period)

        plans = self._plans_for(rec, cls)
        for plan in plans:
            self._schedule(max(plan.fire_at, now), _PREFETCH, plan)

    def _plans_for(self, rec, cls: RequestClass):
        user = rec.user_id
        pair = self.last_two.get(user, [])
        prev = pair[-2] if len(pair) == 2 else None
        cfg = self.params.predictor

        if self.strategy is Strategy.MD1:
            plans = []
            gap = (rec.ts - prev.ts) if prev is not None else DEFAULT_PERIOD
            for obj in self.markov.successors(rec.object_id, self.params.miner.top_n):
                plans.append(timed_plan(rec.user_id, obj, rec.tr, rec.ts, gap,
                                        cfg.prefetch_offset, "markov"))
            return plans

        if self.strategy is Strategy.MD2:
            if self.rules is None:
                return []
            _ts, sess = self.sessions.get(user, (None, set()))
            return predict_by_rules(rec, prev, self.rules, self.params.miner,
                                    context=sess, offset=cfg.prefetch_offset)

        # HPM
        if cls is RequestClass.REAL_TIME:
            return []
        if self.online.is_program(user, rec.object_id, self.now):
            hist = self.obj_history[(user, rec.object_id)]
            plan = history_plan(list(hist), rec, cfg)
            return [plan] if plan is not None else []
        if self.rules is None:
            return []
        _ts, sess = self.sessions.get(user, (None, set()))
        return predict_by_rules(rec, prev, self.rules, self.params.miner,
                                context=sess, offset=cfg.prefetch_offset)

    def _on_prefetch(self, plan):
        dtn = self.topo.home_dtn(plan.user_id)
        store = self.stores[dtn]
        rate = self.catalog.rate(plan.object_id)
        avail = int(self.obs_available(self.now))
        start, end = plan.tr
        end = min(end, avail)
        if end <= start:
            return
        needed = intervals.subtract([(start, end)],
                                    store.object_intervals(plan.object_id))
        for t in self.inflight.get((dtn, plan.object_id), ()):
            needed = intervals.subtract(needed, t.pieces)
            if not needed:
                return
        if not needed:
            return
        total = intervals.measure(needed) * rate
        entry = _LedgerEntry(total, plan.predicted_request_ts)
        self.ledger.append(entry)
        self.prefetch_origin_bytes += total
        t = self._start_transfer(self.topo.server_id, dtn, plan.object_id,
                                 needed, "prefetch", total)
        t.ledger = entry

    def _schedule_tick(self, sub, period: float):
        avail = self.obs_available(self.now)
        boundary = (math.floor(avail / period) + 1) * period
        self._schedule(self.wall_of_obs(boundary), _STREAM_TICK,
                       (sub.object_id, boundary, sub.started_at))

    def _on_stream_tick(self, payload):
        object_id, boundary, started_at = payload
        sub = self.streams.subscriptions.get(object_id)
        if sub is None or sub.started_at != started_at:
            return  # stale tick from an expired subscription
        if self.streams.expire(sub, self.now, period_to_wall=1.0 / self.factor):
            return
        rate = self.catalog.rate(object_id)
        pushes = self.streams.push_tick(sub, boundary, rate)
        for dtn, seg in pushes:
            needed = intervals.subtract(
                [seg], self.stores[dtn].object_intervals(object_id))
            for t in self.inflight.get((dtn, object_id), ()):
                needed = intervals.subtract(needed, t.pieces)
                if not needed:
                    break
            if needed:
                self._start_transfer(self.topo.server_id, dtn, object_id,
                                     needed, "stream")
        self._schedule(self.wall_of_obs(boundary + sub.period), _STREAM_TICK,
                       (object_id, boundary + sub.period, sub.started_at))

    # -- mining and placement epochs ---------------------------------------

    def _on_mine(self):
        if self.strategy in (Strategy.MD2, Strategy.HPM):
            gap = self.params.miner.session_gap
            for user in sorted(self.sessions):
                last_ts, sess = self.sessions[user]
                if sess and self.now - last_ts >= gap:
                    self.transactions.append(frozenset(sess))
                    self.sessions[user] = (last_ts, set())
            if self.transactions:
                self.rules = mine_rules(self.transactions, self.params.miner)
        self._schedule(self.now + self.params.mining_interval, _MINE, None)

    def _on_rebalance(self):
        self.epoch_index += 1
        counts = self.epoch_user_counts
        if counts:
            objs = sorted({o for per in counts.values() for o in per})
            obj_idx = {o: i for i, o in enumerate(objs)}
            vectors = []
            for user in sorted(counts):
                vec = np.zeros(len(objs))
                for o, c in counts[user].items():
                    vec[obj_idx[o]] = c
                norm = np.linalg.norm(vec)
                if norm > 0:
                    vec /= norm
                vectors.append(UserInterestVector(
                    user, self.topo.home_dtn(user), vec))
            k = self.params.kmeans_k or len(self.topo.client_ids)
            groups = cluster_users(vectors, k,
                                   self.seed * 1000003 + self.epoch_index)
            self.groups = groups
            scale = self.topo.condition_scale
            tput = {}
            for i in self.topo.client_ids:
                for j in self.topo.client_ids:
                    if i != j:
                        tput[(i, j)] = self.topo.bandwidth(i, j)
            hours = max(self.params.rebalance_interval / 3600.0, 1e-9)
            for group in groups:
                avail = {i: (1.0 - self.stores[i].used /
                             max(self.stores[i].capacity, 1e-9))
                         for i in self.topo.client_ids}
                freq: dict[int, float] = {}
                g_counts: dict[str, int] = {}
                for user in group.member_ids:
                    dtn = self.topo.home_dtn(user)
                    per = counts.get(user, {})
                    n = sum(per.values())
                    freq[dtn] = freq.get(dtn, 0.0) + n / hours
                    for o, c in per.items():
                        g_counts[o] = g_counts.get(o, 0) + c
                inputs = HubSelectionInputs(tput, avail, freq)
                hub = select_hub(sorted(group.sub_groups), inputs)
                group.hub_dtn = hub
                self.group_rows.append(
                    (self.epoch_index, group.group_id, len(group.member_ids), hub))
                budget = (self.params.replication_budget_fraction *
                          self.stores[hub].capacity)
                plan = replicate_hot(g_counts,
                                     {o: self.epoch_obj_ranges.get(o, [])
                                      for o in g_counts},
                                     budget, self.catalog.rate)
                for object_id, ranges, _size in plan:
                    self._replicate_to_hub(hub, object_id, ranges)
        self.epoch_user_counts = {}
        self.epoch_obj_ranges = {}
        self._schedule(self.now + self.params.rebalance_interval,
                       _REBALANCE, None)

    def _replicate_to_hub(self, hub: int, object_id: str, ranges):
        rate = self.catalog.rate(object_id)
        needed = intervals.subtract(ranges,
                                    self.stores[hub].object_intervals(object_id))
        for t in self.inflight.get((hub, object_id), ()):
            needed = intervals.subtract(needed, t.pieces)
            if not needed:
                return
        if not needed:
            return
        peers = []
        for cid in self.topo.client_ids:
            if cid == hub:
                continue
            held = self.stores[cid].object_intervals(object_id)
            if held:
                peers.append((cid, {object_id: held}))
        scale = self.topo.condition_scale
        pieces = plan_sources(
            needed, object_id, peers,
            lambda d: self.topo.bandwidth(d, hub) * scale,
            self.topo.bandwidth(self.topo.server_id, hub) * scale)
        by_src: dict = {}
        for ival, src in pieces:
            by_src.setdefault(src, []).append(ival)
        for src in sorted(by_src, key=lambda s: (s is None, s)):
            ivals = by_src[src]
            nbytes = intervals.measure(ivals) * rate
            self.replicate_bytes += nbytes
            if src is None:
                self.replicate_origin_bytes += nbytes
                self._start_transfer(self.topo.server_id, hub, object_id,
                                     ivals, "replicate")
            else:
                self._start_transfer(src, hub, object_id, ivals, "replicate")

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimReport:
        if self.strategy.predictive:
            self._schedule(self.t0 + self.params.mining_interval, _MINE, None)
            self._schedule(self.t0 + self.params.rebalance_interval,
                           _REBALANCE, None)
        ri = 0
        n = len(self.records)
        while ri < n or self.heap:
            if self.heap and (ri >= n or self.heap[0][0] <= self.records[ri].ts):
                time, _seq, kind, payload = heapq.heappop(self.heap)
                # Stop once only periodic upkeep remains.
                if ri >= n and kind in (_MINE, _REBALANCE) and \
                        not self.transfers_active and not self._work_left():
                    break
                self.now = time
                if kind == _XFER_END:
                    t, version = payload
                    if t.version == version and t in self.transfers_active:
                        t.remaining = 0.0
                        self._finish_transfer(t)
                elif kind == _PREFETCH:
                    self._on_prefetch(payload)
                elif kind == _STREAM_TICK:
                    if ri >= n and not self._work_left():
                        continue
                    self._on_stream_tick(payload)
                elif kind == _MINE:
                    self._on_mine()
                elif kind == _REBALANCE:
                    self._on_rebalance()
            else:
                rec = self.records[ri]
                ri += 1
                self.now = rec.ts
                self._on_request(rec)
            if self.queue.in_service > self.queue.n_workers:
                raise RuntimeError("origin queue exceeded its worker pool")
        return self._report()

    def _work_left(self) -> bool:
        return bool(self.queue.pending) or self.queue.in_service > 0

    def _report(self) -> SimReport:
        rep = SimReport(
            strategy=self.strategy.value,
            cache_policy=self.cache_setup.policy.value,
            cache_capacity=self.cache_setup.capacity,
            condition=self.topo.condition,
            traffic_factor=self.factor,
            seed=self.seed,
        )
        rep.n_requests = self.n_requests
        rep.total_bytes = self.total_bytes
        rep.origin_requests = self.origin_requests
        rep.normalized_origin_requests = (
            self.origin_requests / self.n_requests if self.n_requests else 0.0)
        lats = sorted(self.queue.latencies)
        rep.latency_mean = sum(lats) / len(lats) if lats else 0.0
        rep.latency_p50 = _percentile(lats, 0.50)
        rep.latency_p95 = _percentile(lats, 0.95)
        rep.latency_p99 = _percentile(lats, 0.99)
        rep.throughput_mean_mbps = (sum(self.throughputs) / len(self.throughputs)
                                    if self.throughputs else 0.0)
        src = self.bytes_by_source
        rep.bytes_local = src["local"]
        rep.bytes_peer = src["peer"]
        rep.bytes_origin = src["origin"]
        rep.bytes_prefetch = src["prefetch"]
        rep.bytes_stream = src["stream"]
        delivered = sum(src.values())
        local = src["local"] + src["prefetch"] + src["stream"]
        rep.local_access_fraction = local / delivered if delivered else 0.0
        rep.full_local_requests = self.full_local

        rep.prefetched_bytes = sum(e.bytes for e in self.ledger)
        rep.prefetch_consumed_bytes = sum(e.consumed for e in self.ledger)
        if rep.prefetched_bytes > 0:
            rep.prefetch_recall = rep.prefetch_consumed_bytes / rep.prefetched_bytes
        rep.prefetch_waste_late = sum(e.late for e in self.ledger)
        rep.prefetch_waste_evicted = sum(e.evicted for e in self.ledger)
        rep.prefetch_waste_wrong = max(
            0.0, rep.prefetched_bytes - rep.prefetch_consumed_bytes -
            rep.prefetch_waste_late - rep.prefetch_waste_evicted)
        rep.stream_origin_reads = self.streams.origin_reads
        rep.stream_origin_bytes = self.streams.origin_bytes
        rep.origin_bytes_total = (self.demand_origin_bytes +
                                  self.prefetch_origin_bytes +
                                  self.streams.origin_bytes +
                                  self.replicate_origin_bytes)
        rep.replicate_bytes = self.replicate_bytes
        return rep


def run(records, catalog: Catalog, topology: Topology, strategy,
        cache: CacheSetup | None = None, params: SimParams | None = None,
        seed: int = 0, traffic_factor: float = 1.0) -> SimReport:
    """Simulate one strategy over a trace and return its metrics report."""
    strategy = Strategy.parse(strategy)
    if traffic_factor <= 0:
        raise ValueError("traffic_factor must be positive")
    if cache is None:
        cache = CacheSetup(capacity=0.0)
    if strategy.uses_cache and cache.capacity <= 0:
        raise ValueError(f"strategy {strategy.value} needs a cache capacity")
    params = params or SimParams()
    scaled = scale_traffic(list(records), traffic_factor)
    engine = Engine(scaled, catalog, topology, strategy, cache, params,
                    seed, traffic_factor)
    return engine.run()
