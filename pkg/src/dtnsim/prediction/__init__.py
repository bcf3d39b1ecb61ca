"""Request prediction: ARIMA history model, rule mining, Markov baseline."""

from .arima import arima_fit_forecast, difference
from .mining import MinerConfig, Rule, RuleSet, export_rules, mine_rules
from .models import (
    MarkovModel,
    PredictorConfig,
    PrefetchPlan,
    history_plan,
    hybrid_dispatch,
    markov_predict,
    predict_by_rules,
    predict_next_request,
)

__all__ = [
    "arima_fit_forecast",
    "difference",
    "MinerConfig",
    "Rule",
    "RuleSet",
    "export_rules",
    "mine_rules",
    "MarkovModel",
    "PredictorConfig",
    "PrefetchPlan",
    "history_plan",
    "hybrid_dispatch",
    "markov_predict",
    "predict_by_rules",
    "predict_next_request",
]
