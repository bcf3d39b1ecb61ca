"""Ready-made workload, topology, and parameter presets.

Two workload presets encode the published observatory access-trace
statistics at desk scale: user-class shares, per-type transfer-volume
mix, and the duplicate share inside overlapping requests.  The matching
topology sizes the observatory uplink from the offered load, so the
no-cache baseline saturates under heavy traffic while cached strategies
keep headroom, mirroring the measured behaviour of the real facilities.
"""

from __future__ import annotations

from .classifier import ClassifierConfig
from .prediction.mining import MinerConfig
from .prediction.models import PredictorConfig
from .simulator import SimParams, Topology, default_topology
from .trace import WorkloadSpec


def _normalized(mix):
    total = sum(mix)
    return tuple(m / total for m in mix)


def ooi_like_workload(n_users: int = 240, duration: float = 172800.0,
                      seed: int = 7, **overrides) -> WorkloadSpec:
    """Ocean-observatory style mix: overlap-heavy, 13.3% program users."""
    kwargs = dict(
        n_users=n_users,
        human_user_fraction=0.867,
        program_volume_fraction=0.901,
        type_volume_mix=_normalized((0.138, 0.257, 0.608)),
        overlap_duplicate_fraction=0.904,
        duration=duration,
        catalog_size=0,  # sized automatically from the population
        spatial_correlation=0.9,
        rng_seed=seed,
    )
    kwargs.update(overrides)
    return WorkloadSpec(**kwargs)


def gage_like_workload(n_users: int = 240, duration: float = 172800.0,
                       seed: int = 11, **overrides) -> WorkloadSpec:
    """Geodetic-network style mix: regular-heavy, 5.9% program users."""
    kwargs = dict(
        n_users=n_users,
        human_user_fraction=0.941,
        program_volume_fraction=0.906,
        type_volume_mix=_normalized((0.772, 0.061, 0.172)),
        overlap_duplicate_fraction=0.896,
        duration=duration,
        catalog_size=0,
        spatial_correlation=0.9,
        rng_seed=seed,
    )
    kwargs.update(overrides)
    return WorkloadSpec(**kwargs)


WORKLOAD_PRESETS = {
    "ooi-like": ooi_like_workload,
    "gage-like": gage_like_workload,
}


def expected_offered_gbps(spec: WorkloadSpec) -> float:
    """Mean byte rate the whole workload requests, in Gbps."""
    from .trace import _type_shapes  # shares the generator's shape math

    n_program = round(spec.n_users * (1.0 - spec.human_user_fraction))
    shapes = [s for s in _type_shapes(spec)
              if spec.type_volume_mix[s.mix_index] > 0]
    u = sum(spec.type_volume_mix[s.mix_index] / s.bytes_per_user_second
            for s in shapes)
    if n_program > 0 and u > 0:
        program_bps = n_program / u * spec.data_rate
    else:
        program_bps = 0.0
    if spec.program_volume_fraction > 0 and program_bps > 0:
        total_bps = program_bps / spec.program_volume_fraction
    else:
        # humans only: two bursts per user over the trace span
        total_bps = (spec.n_users * 2 * spec.human_burst_objects *
                     780.0 * spec.data_rate / spec.duration)
    return total_bps * 8.0 / 1e9


def preset_topology(spec: WorkloadSpec, cache_capacity: float,
                    condition: str = "best",
                    headroom: float = 1.25) -> Topology:
    """Topology whose observatory uplink is sized from the offered load.

    Client DTN ports span the published 40 down to 10 Gbps; the server
    port gets `headroom` times the mean requested byte rate, so demand
    that bypasses the caches contends hard for the uplink.
    """
    server_port = max(expected_offered_gbps(spec) * headroom, 1e-4)
    return default_topology(server_port_gbps=server_port,
                            cache_capacity=cache_capacity,
                            condition=condition)


def desk_params(trace_duration: float) -> SimParams:
    """Module parameters scaled to short synthetic traces.

    The published defaults assume month-long traces (one-week windows,
    daily mining, weekly rebalancing); desk runs scale the windows down
    while keeping the thresholds.
    """
    return SimParams(
        classifier=ClassifierConfig(window=86400.0),
        predictor=PredictorConfig(learning_period=86400.0),
        miner=MinerConfig(),
        mining_interval=min(21600.0, trace_duration / 4),
        rebalance_interval=min(43200.0, trace_duration / 2),
    )


# Desk-scale cache sweep; the published GB-scale lists apply to the
# month-long observatory traces and are configurable per experiment.
DESK_CACHE_SIZES = ("2GB", "8GB", "64GB")
