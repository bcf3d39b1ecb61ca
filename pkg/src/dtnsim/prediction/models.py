"""Pre-fetch planners: history-based, rule-based, and a Markov baseline.

Every planner emits PrefetchPlan values: what to fetch, the expected
request time, and when to start the transfer (a fixed fraction of the
predicted gap after the last request).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..trace import AccessRecord, RequestSequence
from .arima import arima_fit_forecast
from .mining import MinerConfig, RuleSet

DEFAULT_PERIOD = 3600.0


@dataclass
class PredictorConfig:
    arima_window: int = 60
    prefetch_offset: float = 0.8
    learning_period: float = 7 * 86400.0
    repeat_threshold: int = 3
    arima_order: tuple[int, int, int] = (1, 1, 0)

    def __post_init__(self):
        p, d, q = self.arima_order
        if self.arima_window < p + d + q + 1:
            raise ValueError("arima_window too small for the model order")
        if not 0.0 < self.prefetch_offset <= 1.0:
            raise ValueError("prefetch_offset must be in (0, 1]")
        if self.repeat_threshold < 1 or self.learning_period <= 0:
            raise ValueError("learning thresholds must be positive")


@dataclass(frozen=True)
class PrefetchPlan:
    user_id: str
    object_id: str
    tr: tuple[int, int]
    fire_at: float
    predicted_request_ts: float
    strategy: str  # history | mining | markov

    def __post_init__(self):
        if self.fire_at > self.predicted_request_ts:
            raise ValueError("fire_at must not be later than the predicted request")
        if self.tr[0] >= self.tr[1]:
            raise ValueError("predicted observation range is empty")


def timed_plan(user_id, object_id, tr, last_ts, gap, offset, strategy):
    gap = max(float(gap), 1.0)
    predicted = last_ts + gap
    return PrefetchPlan(user_id, object_id, tr, last_ts + offset * gap,
                        predicted, strategy)


def history_plan(timestamps, last: AccessRecord,
                 cfg: PredictorConfig) -> PrefetchPlan | None:
    """ARIMA plan from a single-object request-time history.

    `timestamps` are the request times for one (user, object) stream in
    order, ending with `last.ts`.  Returns None until the pattern has
    repeated often enough within the learning period.
    """
    cutoff = last.ts - cfg.learning_period
    recent = [t for t in timestamps if t >= cutoff]
    if len(recent) - 1 < cfg.repeat_threshold:
        return None
    gaps = [recent[i + 1] - recent[i] for i in range(len(recent) - 1)]
    gaps = gaps[-cfg.arima_window:]
    p, d, q = cfg.arima_order
    if len(gaps) < p + d + q + 1:
        return None
    gap = arima_fit_forecast(gaps, cfg.arima_order)
    gap = max(gap, 1.0)
    shift = round(gap)
    tr = (last.range_start + shift, last.range_end + shift)
    return timed_plan(last.user_id, last.object_id, tr, last.ts, gap,
                       cfg.prefetch_offset, "history")


def predict_next_request(seq: RequestSequence,
                         cfg: PredictorConfig) -> PrefetchPlan | None:
    """Next-request plan for a program user's single-object sequence."""
    if not seq.records:
        return None
    objects = {r.object_id for r in seq.records}
    if len(objects) != 1:
        raise ValueError("history prediction expects a single-object sequence")
    return history_plan([r.ts for r in seq.records], seq.records[-1], cfg)


def predict_by_rules(last: AccessRecord, prev: AccessRecord | None,
                     rules: RuleSet, cfg: MinerConfig, *,
                     context=None, offset: float = 0.8,
                     default_period: float = DEFAULT_PERIOD) -> list[PrefetchPlan]:
    """Rule-based plans for up to top_n objects related to the session.

    Candidates are consequents of rules whose antecedent is contained in
    the session object set, ranked by confidence, then support, then id.
    Objects already requested this session are skipped; their data is
    local already.
    """
    ctx = set(context) if context is not None else {last.object_id}
    best: dict[str, tuple[float, int]] = {}
    for rule in rules.matching(ctx):
        if rule.consequent in ctx:
            continue
        key = (rule.confidence, rule.support)
        if rule.consequent not in best or key > best[rule.consequent]:
            best[rule.consequent] = key
    ranked = sorted(best.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[0]))
    gap = (last.ts - prev.ts) if prev is not None else default_period
    plans = []
    for object_id, _ in ranked[:cfg.top_n]:
        plans.append(timed_plan(last.user_id, object_id, last.tr, last.ts,
                                 gap, offset, "mining"))
    return plans


class MarkovModel:
    """First-order transition counts over serialized access paths."""

    def __init__(self):
        self._counts: dict[str, dict[str, int]] = {}

    def observe(self, src: str, dst: str) -> None:
        row = self._counts.setdefault(src, {})
        row[dst] = row.get(dst, 0) + 1

    def feed_path(self, path) -> None:
        for a, b in zip(path, path[1:]):
            self.observe(a, b)

    def successors(self, last: str, top_n: int) -> list[str]:
        row = self._counts.get(last)
        if not row:
            return []
        ranked = sorted(row.items(), key=lambda kv: (-kv[1], kv[0]))
        return [obj for obj, _ in ranked[:top_n]]


def markov_predict(history, last: AccessRecord, prev: AccessRecord | None, *,
                   top_n: int = 3, offset: float = 0.8,
                   default_period: float = DEFAULT_PERIOD) -> list[PrefetchPlan]:
    """Markov baseline: top successors of the last accessed object."""
    if not history:
        raise ValueError("history must be non-empty")
    model = MarkovModel()
    model.feed_path(list(history))
    gap = (last.ts - prev.ts) if prev is not None else default_period
    plans = []
    for object_id in model.successors(last.object_id, top_n):
        plans.append(timed_plan(last.user_id, object_id, last.tr, last.ts,
                                 gap, offset, "markov"))
    return plans


def hybrid_dispatch(seq: RequestSequence, user_class, pred_cfg: PredictorConfig,
                    miner_cfg: MinerConfig, rules: RuleSet, *,
                    strategy: str = "hpm",
                    realtime_gap_max: float = 300.0) -> list[PrefetchPlan]:
    """Route the latest request of `seq` to the strategy's planner.

    HPM sends program object streams to the history planner, real-time
    streams to nothing (the push engine covers them), and everything
    else to rule mining.  The MD1/MD2 baselines apply one method to
    every request.
    """
    if not seq.records:
        return []
    last = seq.records[-1]
    prev = seq.records[-2] if len(seq.records) > 1 else None
    path = [r.object_id for r in seq.records]
    stream = [r for r in seq.records if r.object_id == last.object_id]
    session = {r.object_id for r in seq.records
               if last.ts - r.ts <= miner_cfg.session_gap}

    if strategy == "md1":
        return markov_predict(path, last, prev, top_n=miner_cfg.top_n,
                              offset=pred_cfg.prefetch_offset)
    if strategy == "md2":
        return predict_by_rules(last, prev, rules, miner_cfg, context=session,
                                offset=pred_cfg.prefetch_offset)
    if strategy != "hpm":
        raise ValueError(f"unknown strategy {strategy!r}")

    if len(stream) > 1 and last.ts - stream[-2].ts <= realtime_gap_max:
        return []  # real-time polling: handled by streaming
    if user_class is not None and user_class.is_program_object(last.object_id):
        plan = history_plan([r.ts for r in stream], last, pred_cfg)
        return [plan] if plan is not None else []
    return predict_by_rules(last, prev, rules, miner_cfg, context=session,
                            offset=pred_cfg.prefetch_offset)
