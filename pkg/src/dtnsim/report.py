"""Run-report assembly: per-cell CSV, pivot tables, and a run manifest.

All outputs are deterministic for a fixed config and seed: floats are
written with repr, rows follow sweep order, and the manifest carries a
config hash instead of timestamps.
"""

from __future__ import annotations

import json
import platform
from pathlib import Path

import numpy as np

from .simulator import SimReport

CELL_KEYS = ("strategy", "cache_size", "policy", "condition", "traffic_factor")


def write_cells(path, cells: list[tuple[tuple, SimReport]]) -> None:
    """One row per sweep cell: the cell key plus every report field."""
    lines = [",".join(CELL_KEYS + SimReport.FIELDS)]
    for key, report in cells:
        prefix = [str(k) for k in key]
        lines.append(",".join(prefix + report.to_row()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def pivot_table(cells: list[tuple[tuple, SimReport]], metric: str,
                row_fields=(3, 4), col_field: int = 0) -> str:
    """Condition/traffic rows by strategy columns, one metric per table."""
    cols: list[str] = []
    rows: list[tuple] = []
    values: dict[tuple, dict[str, str]] = {}
    for key, report in cells:
        col = str(key[col_field])
        row = tuple(str(key[i]) for i in row_fields)
        if col not in cols:
            cols.append(col)
        if row not in rows:
            rows.append(row)
        v = getattr(report, metric)
        values.setdefault(row, {})[col] = "na" if v is None else repr(v) \
            if isinstance(v, float) else str(v)
    header = ",".join(["/".join(CELL_KEYS[i] for i in row_fields)] + cols)
    lines = [header]
    for row in rows:
        cells_out = [values[row].get(c, "na") for c in cols]
        lines.append(",".join(["/".join(row)] + cells_out))
    return "\n".join(lines) + "\n"


def write_pivots(out_dir, cells) -> list[str]:
    metrics = ("throughput_mean_mbps", "latency_mean",
               "normalized_origin_requests", "prefetch_recall",
               "local_access_fraction", "origin_bytes_total")
    written = []
    for metric in metrics:
        path = Path(out_dir) / f"summary_{metric}.csv"
        path.write_text(pivot_table(cells, metric), encoding="utf-8")
        written.append(str(path))
    return written


def write_manifest(out_dir, config_hash: str, extra: dict | None = None) -> None:
    manifest = {
        "config_hash": config_hash,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "package": "dtnsim 0.1.0",
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def write_placement_report(path, group_rows) -> None:
    lines = ["epoch,group_id,members,hub_dtn"]
    for row in group_rows:
        lines.append(",".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
