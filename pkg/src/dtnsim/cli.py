"""Command-line front end: generate, classify, run, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import presets
from .classifier import trace_statistics
from .config import (ExperimentConfig, load_config, parse_duration,
                     parse_size, save_config)
from .simulator import CacheSetup, run as simulate
from .trace import (WorkloadSpec, parse_catalog, parse_trace, synthesize_trace,
                    write_catalog, write_trace)


def _load_workload_spec(args) -> WorkloadSpec:
    if args.preset:
        builder = presets.WORKLOAD_PRESETS.get(args.preset)
        if builder is None:
            raise SystemExit(f"unknown preset {args.preset!r}; "
                             f"choose from {sorted(presets.WORKLOAD_PRESETS)}")
        kwargs = {}
        if args.users is not None:
            kwargs["n_users"] = args.users
        if args.duration is not None:
            kwargs["duration"] = parse_duration(args.duration)
        if args.seed is not None:
            kwargs["seed"] = args.seed
        return builder(**kwargs)
    with open(args.spec, encoding="utf-8") as fh:
        data = json.load(fh)
    return WorkloadSpec(**data)


def cmd_generate(args) -> int:
    spec = _load_workload_spec(args)
    records, catalog = synthesize_trace(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(out / "trace.csv", records)
    write_catalog(out / "catalog.csv", catalog)

    stats = trace_statistics(records, catalog,
                             presets.desk_params(spec.duration).classifier)
    mix = stats.classified_mix
    print(f"wrote {out / 'trace.csv'} ({len(records)} requests, "
          f"{len(catalog)} objects)")
    print("calibration (measured vs target):")
    print(f"  program users     {stats.program_user_share:7.3%} vs "
          f"{1 - spec.human_user_fraction:.3%}")
    print(f"  program volume    {stats.program_volume_share:7.3%} vs "
          f"{spec.program_volume_fraction:.3%}")
    for name, target in zip(("regular", "realtime", "overlapping"),
                            spec.type_volume_mix):
        print(f"  {name:<17} {mix[name]:7.3%} vs {target:.3%}")
    if spec.overlap_duplicate_fraction is not None:
        print(f"  duplicate share   {stats.duplicate_share:7.3%} vs "
              f"{spec.overlap_duplicate_fraction:.3%}")
    return 0


def cmd_classify(args) -> int:
    catalog = parse_catalog(args.catalog)
    records = parse_trace(args.trace, catalog)
    cfg = presets.desk_params(
        records[-1].ts - records[0].ts if records else 86400.0).classifier
    stats = trace_statistics(records, catalog, cfg)
    mix = stats.classified_mix
    print(f"requests {stats.n_requests}, users {stats.n_users}, "
          f"volume {stats.volume_total:.3e} bytes")
    print(f"user classes: program {stats.n_program_users} "
          f"({stats.program_user_share:.1%}), human "
          f"{stats.n_users - stats.n_program_users} "
          f"({1 - stats.program_user_share:.1%})")
    print(f"volume by user class: program {stats.program_volume_share:.1%}, "
          f"human {1 - stats.program_volume_share:.1%}")
    print("volume by request type (classified):")
    for name in ("regular", "realtime", "overlapping"):
        print(f"  {name:<12} {mix[name]:.1%}")
    print(f"overlapping decomposition: fresh "
          f"{1 - stats.duplicate_share:.1%}, duplicate "
          f"{stats.duplicate_share:.1%}")
    return 0


def _resolve_trace(cfg: ExperimentConfig):
    src = cfg.trace
    if src.trace_file:
        catalog = parse_catalog(src.catalog_file)
        records = parse_trace(src.trace_file, catalog)
        spec = None
    else:
        builder = presets.WORKLOAD_PRESETS.get(src.preset)
        if builder is None:
            raise SystemExit(f"unknown preset {src.preset!r}")
        kwargs = {}
        if src.n_users is not None:
            kwargs["n_users"] = src.n_users
        if src.duration is not None:
            kwargs["duration"] = parse_duration(src.duration)
        if src.seed is not None:
            kwargs["seed"] = src.seed
        spec = builder(**kwargs)
        records, catalog = synthesize_trace(spec)
    return records, catalog, spec


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    records, catalog, spec = _resolve_trace(cfg)
    duration = records[-1].ts - records[0].ts if records else 86400.0
    params = presets.desk_params(duration)

    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    from . import report as report_mod
    cells = []
    for cell in cfg.cells():
        strategy, size, policy, condition, factor = cell
        capacity = parse_size(size)
        if spec is not None:
            topo = presets.preset_topology(spec, capacity, condition)
        else:
            topo = presets.default_topology(cache_capacity=capacity,
                                            condition=condition)
        try:
            rep = simulate(records, catalog, topo, strategy,
                           CacheSetup(capacity, policy), params,
                           seed=cfg.seed, traffic_factor=factor)
        except Exception as exc:
            print(f"cell {cell} failed: {exc}", file=sys.stderr)
            return 1
        cells.append((cell, rep))
        if args.verbose:
            print(f"{cell}: tput {rep.throughput_mean_mbps:.1f} Mbps, "
                  f"origin {rep.normalized_origin_requests:.4f}")

    report_mod.write_cells(out / "cells.csv", cells)
    written = report_mod.write_pivots(out, cells)
    report_mod.write_manifest(out, cfg.config_hash(),
                              {"n_requests": len(records)})
    save_config(cfg, out / "config.json")
    print(f"wrote {out / 'cells.csv'} and {len(written)} summary tables")
    return 0


def cmd_report(args) -> int:
    cells_path = Path(args.run_dir) / "cells.csv"
    if not cells_path.exists():
        raise SystemExit(f"no cells.csv under {args.run_dir}")
    text = cells_path.read_text(encoding="utf-8")
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dtnsim",
        description="Trace-driven simulator for push-based observatory "
                    "data delivery over a DTN network")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a calibrated trace")
    g.add_argument("--preset", choices=sorted(presets.WORKLOAD_PRESETS))
    g.add_argument("--spec", help="JSON file with WorkloadSpec fields")
    g.add_argument("--users", type=int)
    g.add_argument("--duration", help="e.g. 2d, 48h, 172800s")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("classify", help="summarize users and request types")
    c.add_argument("--trace", required=True)
    c.add_argument("--catalog", required=True)
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("run", help="run an experiment sweep from a config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--verbose", action="store_true")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="print the cell table of a finished run")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate" and not (args.preset or args.spec):
        raise SystemExit("generate needs --preset or --spec")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
