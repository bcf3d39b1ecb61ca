"""Push-based data delivery over a network of data transfer nodes.

Library layout:

- ``trace``       access-record model, parsing, synthetic workloads
- ``classifier``  human/program users, request typing, overlap splits
- ``prediction``  ARIMA history model, FP-Growth rules, Markov baseline
- ``cache``       interval caches with LRU/LFU eviction and peer plans
- ``placement``   K-Means virtual groups, hub selection, replication
- ``streaming``   pull-to-push promotion for real-time polling
- ``simulator``   deterministic discrete-event engine and metrics
- ``cli``         generate / classify / run / report commands
"""

from .cache import CachePolicy, CacheStore, LookupResult
from .classifier import (ClassifierConfig, RequestClass, UserClass, UserLabel,
                         classify_request, classify_user, decompose_overlap,
                         trace_statistics)
from .prediction import (MinerConfig, PredictorConfig, PrefetchPlan, RuleSet,
                         arima_fit_forecast, hybrid_dispatch, markov_predict,
                         mine_rules, predict_by_rules, predict_next_request)
from .simulator import (CacheSetup, SimParams, SimReport, Strategy, Topology,
                        default_topology, run)
from .trace import (AccessRecord, Catalog, DataObject, RequestSequence,
                    WorkloadSpec, parse_catalog, parse_trace, scale_traffic,
                    synthesize_trace, write_catalog, write_trace)

__version__ = "0.1.0"
