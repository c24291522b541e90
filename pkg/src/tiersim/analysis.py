"""Efficiency metric, footprint-ratio x intensity sweeps, and curve features.

Efficiency is the time-to-solution ratio baseline/tiered, where the baseline
runs the same trace with every touch served by the fast tier.  Sweeps size
each workload so its footprint hits a requested fraction of the fast tier's
capacity (footprints are always expressed relative to that capacity, which
makes results portable across system scales), then run the baseline and the
tiered simulation per grid point.

Three closed-form features anchor the curves:

* floor       -- slow/fast read-bandwidth ratio, the efficiency of a fully
                 memory-bound workload that misses on everything;
* knee_ai     -- peak FLOP/s over fast bandwidth, where the baseline turns
                 compute-bound and its bandwidth starts to decline;
* threshold_ai -- peak FLOP/s over slow bandwidth, above which compute time
                 hides all slow-tier traffic and efficiency approaches 1.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .engine import SimResult, simulate, warmup
from .tiers import SystemSpec
from .workloads import (
    Trace,
    gen_fft3d,
    gen_gemm_tiled,
    gen_lu,
    gen_polynomial,
    gen_random,
    gen_stream,
)

SWEEP_SCHEMA = "tiersim-sweep-v1"

CSV_COLUMNS = (
    "workload",
    "footprint_ratio",
    "arithmetic_intensity",
    "threads",
    "policy",
    "efficiency",
    "base_time_s",
    "tiered_time_s",
    "demand_faults",
    "prefetch_useful",
    "error_code",
)


class SweepFormatError(ValueError):
    """Sweep CSV does not conform to the schema."""


def efficiency(base: SimResult, tiered: SimResult) -> float:
    """Time-to-solution ratio baseline/tiered; above 1 means the tiered
    system won (possible only with NUMA placement effects)."""
    if tiered.total_time == 0:
        raise ValueError("tiered run has zero duration")
    return base.total_time / tiered.total_time


def theoretical_floor(system: SystemSpec) -> float:
    return system.slow.read_bandwidth / system.fast.read_bandwidth


def ai_threshold(system: SystemSpec) -> float:
    return system.peak_flops / system.slow.read_bandwidth


def knee_ai(system: SystemSpec) -> float:
    return system.peak_flops / system.fast.read_bandwidth


def avg_fast_bandwidth(result: SimResult) -> float:
    """Mean fast-tier traffic rate over the run, bytes/second."""
    if result.total_time == 0:
        return 0.0
    return (result.bytes_fast_read + result.bytes_fast_write) / result.total_time


@dataclass(frozen=True)
class EfficiencyPoint:
    workload: str
    footprint_ratio: float
    arithmetic_intensity: float
    threads: int
    policy: str
    efficiency: float
    base_time_s: float
    tiered_time_s: float
    demand_faults: int
    prefetch_useful: int
    error_code: str = ""


@dataclass(frozen=True)
class SweepFeatures:
    floor: float
    knee_ai: float
    threshold_ai: float


@dataclass(frozen=True)
class SweepGrid:
    footprint_ratios: tuple[float, ...]
    ai_params: tuple = (None,)
    threads: int = 1

    def __post_init__(self):
        if not self.footprint_ratios or not self.ai_params:
            raise ValueError("sweep grid must be non-empty")


@dataclass(frozen=True)
class SweepTable:
    points: tuple[EfficiencyPoint, ...]
    features: SweepFeatures


def _round_to_multiple(x: float, m: int, lo: int) -> int:
    return max(lo, m * round(x / m))


def build_workload(family: str, system: SystemSpec, ratio: float,
                   ai_param, threads: int, seed: int = 0) -> Trace:
    """Size a workload family so its footprint is ~ratio * fast capacity."""
    budget = ratio * system.fast.capacity
    if family == "polynomial":
        degree = int(ai_param)
        elements = max(threads, round(budget / 8))
        chunk = min(65536, 8 * (elements // threads))
        return gen_polynomial(elements, degree, "one", threads, chunk)
    if family == "polynomial2":
        degree = int(ai_param)
        elements = max(threads, round(budget / 16))
        chunk = min(65536, 8 * (elements // threads))
        return gen_polynomial(elements, degree, "two", threads, chunk)
    if family == "stream":
        kernel = str(ai_param)
        n_regions = 2 if kernel in ("copy", "scale") else 3
        elements = max(threads, round(budget / (8 * n_regions)))
        chunk = min(65536, 8 * (elements // threads))
        return gen_stream(kernel, elements, threads, chunk)
    if family == "gemm":
        tile = int(ai_param["tile"])
        esize = int(ai_param.get("element_size", 8))
        n = _round_to_multiple(math.sqrt(budget / (3 * esize)), tile, tile)
        return gen_gemm_tiled(n, tile, esize, threads)
    if family == "lu":
        variant = ai_param["variant"]
        tile = int(ai_param.get("tile", 0))
        n = round(math.sqrt(budget / 8))
        if variant == "tiled":
            if tile < 1:
                raise ValueError("tiled LU needs a positive tile")
            n = _round_to_multiple(math.sqrt(budget / 8), tile, tile)
        return gen_lu(max(1, n), variant, tile, threads)
    if family == "fft":
        n = max(2, round(budget ** (1 / 3) / 16 ** (1 / 3)))
        return gen_fft3d(n, threads)
    if family == "random":
        ai = float(ai_param) if ai_param is not None else 0.0
        footprint = max(4096, round(budget))
        touch_bytes = 4096
        touches = max(1, footprint // touch_bytes)
        return gen_random(footprint, touches, touch_bytes, ai, threads, seed)
    raise ValueError(f"unknown workload family {family!r}")


def _run_point(args) -> EfficiencyPoint:
    (family, system, ratio, ai_param, threads, policy, k, warm, seed) = args
    try:
        trace = build_workload(family, system, ratio, ai_param, threads, seed)
        actual_ratio = trace.meta.footprint_bytes / system.fast.capacity
        base = simulate(trace, system, policy="none", mode="single_tier")
        warm_cache = warmup(trace, system) if warm else None
        tiered = simulate(trace, system, policy=policy, mode="tiered",
                          k=k, warm=warm_cache)
        return EfficiencyPoint(
            workload=trace.meta.name,
            footprint_ratio=actual_ratio,
            arithmetic_intensity=trace.meta.arithmetic_intensity,
            threads=threads,
            policy=policy,
            efficiency=efficiency(base, tiered),
            base_time_s=base.total_time,
            tiered_time_s=tiered.total_time,
            demand_faults=tiered.demand_faults,
            prefetch_useful=tiered.prefetch_useful,
        )
    except Exception as exc:  # recorded, never silently dropped
        return EfficiencyPoint(
            workload=family, footprint_ratio=ratio,
            arithmetic_intensity=float("nan"), threads=threads, policy=policy,
            efficiency=float("nan"), base_time_s=float("nan"),
            tiered_time_s=float("nan"), demand_faults=0, prefetch_useful=0,
            error_code=type(exc).__name__,
        )


def run_sweep(family: str, grid: SweepGrid, system: SystemSpec,
              policy: str = "sequential", k: int = 8, warm: bool = True,
              seed: int = 0, jobs: int = 1) -> SweepTable:
    """Run base + tiered simulations over the grid; failed points are kept
    with an error code.  Output order is deterministic regardless of jobs."""
    tasks = [
        (family, system, ratio, ai_param, grid.threads, policy, k, warm, seed)
        for ai_param in grid.ai_params
        for ratio in grid.footprint_ratios
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_run_point, tasks))
    else:
        points = [_run_point(t) for t in tasks]

    def sort_key(p: EfficiencyPoint):
        ai = p.arithmetic_intensity
        return (math.isnan(ai), ai, p.footprint_ratio, p.workload)

    points.sort(key=sort_key)
    features = SweepFeatures(
        floor=theoretical_floor(system),
        knee_ai=knee_ai(system),
        threshold_ai=ai_threshold(system),
    )
    return SweepTable(tuple(points), features)


def decline_onset_ai(curve: list[tuple[float, float]], rel_tol: float = 0.02) -> float:
    """First intensity at which a (ai, bandwidth) curve has fallen more than
    rel_tol below its running peak; nan when it never declines."""
    peak = 0.0
    for ai, bw in sorted(curve):
        peak = max(peak, bw)
        if bw < (1.0 - rel_tol) * peak:
            return ai
    return float("nan")


def write_sweep_csv(table: SweepTable, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {SWEEP_SCHEMA}\n")
        f = table.features
        fh.write(f"# floor={f.floor!r} knee_ai={f.knee_ai!r} "
                 f"threshold_ai={f.threshold_ai!r}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for p in table.points:
            writer.writerow([
                p.workload, repr(p.footprint_ratio), repr(p.arithmetic_intensity),
                p.threads, p.policy, repr(p.efficiency), repr(p.base_time_s),
                repr(p.tiered_time_s), p.demand_faults, p.prefetch_useful,
                p.error_code,
            ])


def read_sweep_csv(path) -> SweepTable:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# {SWEEP_SCHEMA}":
            raise SweepFormatError(
                f"expected schema line '# {SWEEP_SCHEMA}', got {first!r}"
            )
        feat_line = fh.readline().strip()
        if not feat_line.startswith("# "):
            raise SweepFormatError("missing features line")
        feats = {}
        for tokens in feat_line[2:].split():
            key, _, val = tokens.partition("=")
            feats[key] = float(val)
        try:
            features = SweepFeatures(feats["floor"], feats["knee_ai"],
                                     feats["threshold_ai"])
        except KeyError as exc:
            raise SweepFormatError(f"features line missing {exc}") from exc
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise SweepFormatError("column header mismatch")
        points = []
        for row in reader:
            if len(row) != len(CSV_COLUMNS):
                raise SweepFormatError(f"malformed row: {row!r}")
            points.append(EfficiencyPoint(
                workload=row[0], footprint_ratio=float(row[1]),
                arithmetic_intensity=float(row[2]), threads=int(row[3]),
                policy=row[4], efficiency=float(row[5]),
                base_time_s=float(row[6]), tiered_time_s=float(row[7]),
                demand_faults=int(row[8]), prefetch_useful=int(row[9]),
                error_code=row[10],
            ))
    return SweepTable(tuple(points), features)
