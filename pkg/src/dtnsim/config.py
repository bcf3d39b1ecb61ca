"""Experiment configuration: JSON files with explicit units.

Sizes accept B/KB/MB/GB/TB, bandwidths Gbps/Mbps, durations s/min/h/d.
All units are decimal (1 GB = 1e9 bytes).  parse(serialize(config))
round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

_SIZE_UNITS = {"b": 1.0, "kb": 1e3, "mb": 1e6, "gb": 1e9, "tb": 1e12}
_BW_UNITS = {"gbps": 1.0, "mbps": 1e-3, "kbps": 1e-6}
_TIME_UNITS = {"s": 1.0, "min": 60.0, "h": 3600.0, "d": 86400.0}


def _parse_unit(text, units, kind) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    for suffix in sorted(units, key=len, reverse=True):
        if s.endswith(suffix):
            return float(s[: -len(suffix)]) * units[suffix]
    raise ValueError(f"cannot parse {kind} value {text!r}")


def parse_size(text) -> float:
    """'128GB' -> 1.28e11 bytes."""
    return _parse_unit(text, _SIZE_UNITS, "size")


def parse_bandwidth(text) -> float:
    """'40Gbps' -> 40.0 (Gbps)."""
    return _parse_unit(text, _BW_UNITS, "bandwidth")


def parse_duration(text) -> float:
    """'2d' -> 172800.0 seconds."""
    return _parse_unit(text, _TIME_UNITS, "duration")


def format_size(nbytes: float) -> str:
    for suffix, mul in (("TB", 1e12), ("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if nbytes >= mul:
            v = nbytes / mul
            return f"{v:g}{suffix}"
    return f"{nbytes:g}B"


@dataclass
class TraceSource:
    """Either a preset workload to synthesize or trace/catalog files."""
    preset: str | None = None
    n_users: int | None = None
    duration: str | None = None
    seed: int | None = None
    trace_file: str | None = None
    catalog_file: str | None = None

    def __post_init__(self):
        if (self.preset is None) == (self.trace_file is None):
            raise ValueError("trace source needs a preset or a trace_file")
        if self.trace_file is not None and self.catalog_file is None:
            raise ValueError("trace_file needs a catalog_file")


@dataclass
class ExperimentConfig:
    trace: TraceSource
    strategies: list[str] = field(default_factory=lambda: [
        "nocache", "cacheonly", "md1", "md2", "hpm"])
    cache_sizes: list[str] = field(default_factory=lambda: ["128GB"])
    eviction_policies: list[str] = field(default_factory=lambda: ["lru"])
    network_conditions: list[str] = field(default_factory=lambda: ["best"])
    traffic_factors: list[float] = field(default_factory=lambda: [1.0])
    seed: int = 0
    output_dir: str = "runs"

    def __post_init__(self):
        for name in ("strategies", "cache_sizes", "eviction_policies",
                     "network_conditions", "traffic_factors"):
            if not getattr(self, name):
                raise ValueError(f"sweep axis {name} must be non-empty")
        for size in self.cache_sizes:
            if parse_size(size) <= 0:
                raise ValueError(f"cache size {size!r} must be positive")

    def cells(self):
        """Sweep cells in deterministic order."""
        for strategy in self.strategies:
            for size in self.cache_sizes:
                for policy in self.eviction_policies:
                    for condition in self.network_conditions:
                        for factor in self.traffic_factors:
                            yield (strategy, size, policy, condition, factor)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        trace = TraceSource(**data.pop("trace"))
        return cls(trace=trace, **data)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(cfg.to_json() + "\n", encoding="utf-8")
