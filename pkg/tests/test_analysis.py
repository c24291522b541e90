"""Efficiency metric, curve features, sweep behavior, CSV round-trip."""

import math

import pytest

from tiersim import (
    SweepGrid,
    ai_threshold,
    default_system,
    efficiency,
    gen_polynomial,
    knee_ai,
    run_sweep,
    simulate,
    theoretical_floor,
)
from tiersim.analysis import (
    avg_fast_bandwidth,
    decline_onset_ai,
    read_sweep_csv,
    write_sweep_csv,
)
from tiersim.engine import SimResult

from conftest import G, MiB, make_system


def fake_result(total):
    return SimResult(
        mode="tiered", total_time=total, per_thread_time=(total,),
        demand_faults=0, prefetch_issued=0, prefetch_completed=0,
        prefetch_useful=0, writebacks=0, bytes_fast_read=0,
        bytes_fast_write=0, bytes_slow_read=0, bytes_slow_write=0,
        bandwidth_samples=(), total_time_ps=int(total * 10**12),
        per_thread_time_ps=(int(total * 10**12),),
    )


def test_efficiency_arithmetic():
    assert efficiency(fake_result(100.0), fake_result(125.0)) == 0.8
    assert efficiency(fake_result(3.5), fake_result(3.5)) == 1.0
    with pytest.raises(ValueError):
        efficiency(fake_result(1.0), fake_result(0.0))


def test_theoretical_floor_values():
    assert theoretical_floor(default_system()) == 0.125
    eq = make_system(8 * MiB, slow_read=80 * G)
    assert theoretical_floor(eq) == 1.0
    quarter = make_system(8 * MiB, slow_read=20 * G)
    assert theoretical_floor(quarter) == 0.25


def test_ai_threshold_values():
    system = default_system()
    assert ai_threshold(system) == pytest.approx(154.88)
    assert 128 <= ai_threshold(system) <= 256
    half_peak = default_system(per_core_compute=17_600_000_000)
    assert ai_threshold(half_peak) == pytest.approx(154.88 / 2)
    fat_slow = make_system(8 * MiB, threads=44, slow_read=20 * G)
    assert ai_threshold(fat_slow) == pytest.approx(154.88 / 2)


def test_knee_ai_values():
    system = default_system()
    assert knee_ai(system) == pytest.approx(19.36)
    assert 16 <= knee_ai(system) <= 32
    half_fast = make_system(8 * MiB, threads=44, fast_bw=40 * G)
    assert knee_ai(half_fast) == pytest.approx(38.72)
    balanced = make_system(8 * MiB, threads=44, fast_bw=10 * G,
                           slow_read=10 * G)
    assert knee_ai(balanced) == ai_threshold(balanced)


def test_decline_onset_detection():
    curve = [(1, 80.0), (8, 80.0), (16, 80.0), (24, 64.0), (32, 48.0)]
    assert decline_onset_ai(curve) == 24
    flat = [(1, 80.0), (64, 80.0)]
    assert math.isnan(decline_onset_ai(flat))


def test_sweep_in_cache_parity():
    system = make_system(4 * MiB, threads=4)
    grid = SweepGrid(footprint_ratios=(0.5,), ai_params=(0, 64), threads=4)
    table = run_sweep("polynomial", grid, system)
    assert len(table.points) == 2
    for p in table.points:
        assert not p.error_code
        assert 0.98 <= p.efficiency <= 1.02


def test_sweep_floor_point():
    system = make_system(4 * MiB, threads=8)
    grid = SweepGrid(footprint_ratios=(2.0,), ai_params=(0,), threads=8)
    table = run_sweep("polynomial", grid, system, policy="sequential",
                      warm=False)
    point = table.points[0]
    assert abs(point.efficiency - table.features.floor) <= 0.01
    assert table.features.floor == 0.125


def test_sweep_monotone_in_intensity():
    system = make_system(4 * MiB, threads=8)
    grid = SweepGrid(footprint_ratios=(2.0,), ai_params=(0, 4, 16, 64, 256),
                     threads=8)
    table = run_sweep("polynomial", grid, system, policy="sequential")
    effs = [p.efficiency for p in table.points]
    ais = [p.arithmetic_intensity for p in table.points]
    assert ais == sorted(ais)
    for lo, hi in zip(effs, effs[1:]):
        assert hi >= lo - 1e-9
    for p in table.points:
        assert p.efficiency >= table.features.floor * 0.98


def test_sweep_non_increasing_in_footprint_below_knee():
    system = make_system(4 * MiB, threads=8)
    grid = SweepGrid(footprint_ratios=(0.5, 1.0, 2.0, 4.0), ai_params=(4,),
                     threads=8)
    table = run_sweep("polynomial", grid, system, policy="sequential")
    effs = [p.efficiency for p in table.points]
    for lo, hi in zip(effs, effs[1:]):
        assert hi <= lo + 1e-9


def test_sweep_single_point_and_failed_point():
    system = make_system(4 * MiB, threads=2)
    grid = SweepGrid(footprint_ratios=(1.0,), ai_params=(8,), threads=2)
    table = run_sweep("polynomial", grid, system)
    assert len(table.points) == 1
    bad = SweepGrid(footprint_ratios=(1.0,),
                    ai_params=({"variant": "tiled", "tile": 0},), threads=2)
    table = run_sweep("lu", bad, system)
    assert len(table.points) == 1
    assert table.points[0].error_code == "ValueError"


def test_sweep_parallel_jobs_deterministic():
    system = make_system(2 * MiB, threads=2)
    grid = SweepGrid(footprint_ratios=(0.5, 2.0), ai_params=(0, 64), threads=2)
    serial = run_sweep("polynomial", grid, system, jobs=1)
    parallel = run_sweep("polynomial", grid, system, jobs=2)
    assert serial == parallel


def test_single_tier_bandwidth_declines_past_knee():
    system = make_system(4 * MiB, threads=8, per_core=35_200_000_000)
    knee = knee_ai(system)  # 35.2 GF * 8 / 80 GB/s = 3.52
    curve = []
    for ai in (1, 2, 4, 8, 16):
        tr = gen_polynomial(2 * MiB // 8, 4 * ai, "one", 8, 32768)
        res = simulate(tr, system, mode="single_tier")
        curve.append((ai, avg_fast_bandwidth(res)))
    onset = decline_onset_ai(curve)
    assert knee <= onset <= 2 * knee


def test_csv_round_trip(tmp_path):
    system = make_system(2 * MiB, threads=2)
    grid = SweepGrid(footprint_ratios=(0.5, 2.0), ai_params=(0, 8), threads=2)
    table = run_sweep("polynomial", grid, system, policy="sequential")
    path = tmp_path / "sweep.csv"
    write_sweep_csv(table, path)
    first = path.read_text().splitlines()[0]
    assert first == "# tiersim-sweep-v1"
    loaded = read_sweep_csv(path)
    assert loaded == table
    # byte-identical rewrite
    path2 = tmp_path / "sweep2.csv"
    write_sweep_csv(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()
