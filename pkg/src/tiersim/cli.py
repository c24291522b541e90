"""Command-line surface: run one simulation, sweep a grid, report a sweep.

Exit codes: 0 success, 2 configuration or schema error (the offending key
is named), 3 simulation error.  Outputs are deterministic: the same config
produces byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import (
    SweepFormatError,
    SweepGrid,
    read_sweep_csv,
    run_sweep,
    write_sweep_csv,
)
from .config import ConfigError, load_bands, load_run_config, load_sweep_config
from .engine import EngineError, simulate, warmup
from .tiers import SpecError
from .workloads import (
    gen_fft3d,
    gen_gemm_tiled,
    gen_lu,
    gen_polynomial,
    gen_random,
    gen_stream,
)

RUN_SCHEMA = "tiersim-run-v1"

GENERATORS = {
    "polynomial": gen_polynomial,
    "stream": gen_stream,
    "gemm": gen_gemm_tiled,
    "lu": gen_lu,
    "fft3d": gen_fft3d,
    "random": gen_random,
}


def _build_trace(family: str, parameters: dict, seed: int):
    gen = GENERATORS.get(family)
    if gen is None:
        raise ConfigError(f"workload.family: unknown family {family!r}")
    params = dict(parameters)
    if family == "random":
        params.setdefault("seed", seed)
    try:
        return gen(**params)
    except TypeError as exc:
        raise ConfigError(f"workload.parameters: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"workload.parameters: {exc}") from exc


def cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    trace = _build_trace(cfg.family, cfg.parameters, seed)
    out_dir = Path(args.out or cfg.output or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    warm = warmup(trace, cfg.system) if (cfg.warmup and cfg.tiered) else None
    mode = "tiered" if cfg.tiered else "single_tier"
    result = simulate(trace, cfg.system, policy=cfg.policy, mode=mode,
                      k=cfg.policy_k, warm=warm)
    result.check_conservation(cfg.system.page_size)

    csv_path = out_dir / "run_result.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# {RUN_SCHEMA}\n")
        fh.write("thread,time_s\n")
        for t, secs in enumerate(result.per_thread_time):
            fh.write(f"{t},{secs!r}\n")
        fh.write(f"total,{result.total_time!r}\n")

    summary = result.summary()
    summary["workload"] = trace.meta.name
    summary["workload_parameters"] = trace.meta.parameters
    summary["arithmetic_intensity"] = trace.meta.arithmetic_intensity
    summary["footprint_bytes"] = trace.meta.footprint_bytes
    summary["policy"] = cfg.policy
    summary["seed"] = seed
    json_path = out_dir / "run_summary.json"
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    jobs = args.jobs or os.cpu_count() or 1
    grid = SweepGrid(footprint_ratios=cfg.footprint_ratios,
                     ai_params=cfg.ai_params, threads=cfg.threads)
    table = run_sweep(cfg.family, grid, cfg.system, policy=cfg.policy,
                      k=cfg.policy_k, warm=cfg.warmup, seed=seed, jobs=jobs)
    out_dir = Path(args.out or cfg.output or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep.csv"
    write_sweep_csv(table, csv_path)
    features_path = out_dir / "sweep_features.json"
    with open(features_path, "w") as fh:
        json.dump({"floor": table.features.floor,
                   "knee_ai": table.features.knee_ai,
                   "threshold_ai": table.features.threshold_ai},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    failed = sum(1 for p in table.points if p.error_code)
    print(f"wrote {csv_path} ({len(table.points)} points, {failed} failed) "
          f"and {features_path}")
    return 0


def _check_band(name: str, value: float, band: tuple[float, float]) -> str:
    lo, hi = band
    verdict = "PASS" if lo <= value <= hi else "FAIL"
    return f"band {name} [{lo:g}, {hi:g}]: {verdict} ({value:.6g})"


def cmd_report(args) -> int:
    table = read_sweep_csv(args.sweep_csv)
    if not table.points:
        raise SweepFormatError("sweep CSV contains no data points")
    f = table.features
    print(f"floor: {f.floor:.6g}")
    print(f"knee_ai: {f.knee_ai:.6g} FLOP/byte")
    print(f"threshold_ai: {f.threshold_ai:.6g} FLOP/byte")
    at_max = {}
    for p in table.points:
        if p.error_code:
            continue
        cur = at_max.get(p.workload)
        if cur is None or p.footprint_ratio > cur.footprint_ratio:
            at_max[p.workload] = p
    for name in sorted(at_max):
        p = at_max[name]
        print(f"workload {name}: efficiency {p.efficiency:.4f} "
              f"at footprint ratio {p.footprint_ratio:.3g}")
    errors = [p for p in table.points if p.error_code]
    for p in errors:
        print(f"workload {p.workload}: point at ratio {p.footprint_ratio:.3g} "
              f"failed ({p.error_code})")
    if args.bands:
        bands = load_bands(args.bands)
        if "floor" in bands:
            print(_check_band("floor", f.floor, bands["floor"]))
        if "knee_ai" in bands:
            print(_check_band("knee_ai", f.knee_ai, bands["knee_ai"]))
        if "threshold_ai" in bands:
            print(_check_band("threshold_ai", f.threshold_ai,
                              bands["threshold_ai"]))
        for name, band in sorted(bands.get("workloads", {}).items()):
            if name in at_max:
                print(_check_band(f"efficiency[{name}]",
                                  at_max[name].efficiency, band))
            else:
                print(f"band efficiency[{name}]: FAIL (no data)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiersim",
        description="Trace-driven two-tier memory system simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation from a config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--seed", type=int)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a footprint/intensity sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out", help="output directory")
    p_sweep.add_argument("--jobs", type=int, help="parallel sweep workers")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser("report", help="summarize a sweep CSV")
    p_report.add_argument("sweep_csv")
    p_report.add_argument("--bands", help="expectation bands JSON")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SweepFormatError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EngineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
