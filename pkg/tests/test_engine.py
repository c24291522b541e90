"""Engine behavior: timing model, paging, prefetch integration, NUMA."""

import pytest

from tiersim import (
    EngineError,
    NumaSpec,
    Region,
    Trace,
    TraceMeta,
    WorkBlock,
    AccessRun,
    AccessKind,
    gen_fft3d,
    gen_polynomial,
    gen_random,
    gen_stream,
    simulate,
    warmup,
)
from tiersim.analysis import efficiency

from conftest import G, MiB, make_system

PS = 10**12


def one_read_trace(nbytes, region_size=None):
    region = Region(0, region_size or nbytes, "x")
    block = WorkBlock(0, (AccessRun(0, 0, nbytes, AccessKind.READ),), 0)
    meta = TraceMeta("single", {}, 0, nbytes, region.size, 0.0)
    return Trace((region,), (block,), meta)


def test_single_tier_stream_copy_hits_bus_bandwidth(small_system):
    # aggregate r+w traffic limited by the 80 GB/s duplex bus
    tr = gen_stream("copy", 2 * MiB // 8, 8, 65536)
    res = simulate(tr, small_system, mode="single_tier")
    expected = tr.meta.total_bytes / (80 * G)
    assert res.total_time == pytest.approx(expected, rel=0.01)


def test_in_cache_tiered_matches_single_tier(small_system):
    tr = gen_polynomial(4 * MiB // 8, 8, "one", 8, 65536)  # ratio 0.5
    warm = warmup(tr, small_system)
    base = simulate(tr, small_system, mode="single_tier")
    tier = simulate(tr, small_system, policy="sequential", mode="tiered",
                    warm=warm)
    assert tier.demand_faults == 0
    assert tier.total_time_ps == base.total_time_ps


def test_streaming_twice_cache_saturates_slow_tier(small_system):
    tr = gen_polynomial(16 * MiB // 8, 0, "one", 8, 65536)  # ratio 2, cold
    res = simulate(tr, small_system, policy="sequential", mode="tiered")
    slow_bw = res.bytes_slow_read / res.total_time
    assert slow_bw == pytest.approx(10 * G, rel=0.05)


def test_empty_trace_runs_in_zero_time(small_system):
    tr = Trace((Region(0, 4096, "x"),), (), TraceMeta("empty", {}, 0, 0, 4096, 0.0))
    res = simulate(tr, small_system, mode="tiered")
    assert res.total_time == 0.0
    assert res.demand_faults == 0
    assert res.bytes_slow_read == 0


def test_single_fault_service_time_hand_computed(small_system):
    # latency + page transfer on slow read + page streamed on the fast bus
    tr = one_read_trace(4096)
    res = simulate(tr, small_system, mode="tiered")
    expected_ps = (10_000_000                       # 10 us
                   + -(-4096 * PS // (10 * G))      # slow fetch
                   + -(-4096 * PS // (80 * G)))     # fast stream
    assert res.total_time_ps == expected_ps
    assert res.demand_faults == 1
    assert res.bytes_slow_read == 4096


def test_determinism_repeated_runs(small_system):
    tr = gen_random(2 * MiB, 300, 4096, 1.0, 4, seed=3)
    a = simulate(tr, small_system, policy="stride", mode="tiered", warm=True)
    b = simulate(tr, small_system, policy="stride", mode="tiered", warm=True)
    assert a == b


def test_lower_bounds_hold(small_system):
    tr = gen_polynomial(4 * MiB // 8, 64, "one", 4, 65536)
    res = simulate(tr, small_system, policy="sequential", mode="tiered")
    compute_floor = tr.meta.total_flops / small_system.peak_flops
    unique_bytes = tr.meta.footprint_bytes
    assert res.total_time >= compute_floor
    assert res.total_time >= unique_bytes / (10 * G) * 0.999


def test_conservation_identities(small_system):
    for tr in (gen_polynomial(4 * MiB // 8, 4, "two", 4, 32768),
               gen_random(4 * MiB, 500, 4096, 0.5, 3, seed=8)):
        for policy in ("none", "sequential", "stride"):
            res = simulate(tr, small_system, policy=policy, mode="tiered")
            res.check_conservation(small_system.page_size)


def test_single_tier_invariant_under_fast_capacity():
    tr = gen_polynomial(2 * MiB // 8, 16, "one", 4, 32768)
    a = simulate(tr, make_system(4 * MiB, threads=4), mode="single_tier")
    b = simulate(tr, make_system(64 * MiB, threads=4), mode="single_tier")
    assert a == b


def test_prefetch_never_hurts_streaming(small_system):
    for tr in (gen_polynomial(16 * MiB // 8, 0, "one", 8, 65536),
               gen_stream("triad", 2 * MiB // 8, 4, 32768),
               gen_fft3d(32, 4)):
        t_none = simulate(tr, small_system, policy="none", mode="tiered",
                          warm=True).total_time
        for policy in ("sequential", "stride"):
            t = simulate(tr, small_system, policy=policy, mode="tiered",
                         warm=True).total_time
            assert t <= t_none * (1 + 1e-6)


def test_prefetch_pipeline_converts_misses(small_system):
    # ascending unit-stride stream: after warm-up every page is prefetched
    # or arriving; demand faults stay a small fraction of pages
    tr = gen_polynomial(16 * MiB // 8, 0, "one", 1, 65536)
    res = simulate(tr, small_system, policy="sequential", mode="tiered")
    pages = tr.meta.footprint_bytes // 4096
    assert res.prefetch_useful + res.demand_faults >= pages * 0.99
    assert res.demand_faults <= pages * 0.2
    assert res.prefetch_useful >= pages * 0.8


def test_warmup_fills_first_touch_order(small_system):
    tr = gen_polynomial(4 * MiB // 8, 0, "one", 2, 65536)   # ratio 0.5
    cache = warmup(tr, small_system)
    assert len(cache) == tr.meta.footprint_bytes // 4096
    tr2 = gen_polynomial(16 * MiB // 8, 0, "one", 2, 65536)  # ratio 2
    cache2 = warmup(tr2, small_system)
    assert len(cache2) == small_system.capacity_pages


def test_writebacks_require_dirty_evictions(small_system):
    # two-stream traffic at ratio 2 writes pages that must be written back
    tr = gen_polynomial(16 * MiB // 8, 0, "two", 4, 65536)
    res = simulate(tr, small_system, policy="sequential", mode="tiered")
    assert res.writebacks > 0
    assert res.bytes_slow_write == res.writebacks * 4096
    # read-only traffic never writes back
    tr_r = gen_polynomial(16 * MiB // 8, 0, "one", 4, 65536)
    res_r = simulate(tr_r, small_system, policy="sequential", mode="tiered")
    assert res_r.writebacks == 0


def test_footprint_monotonicity(small_system):
    times = []
    for mib in (4, 8, 16, 32):
        tr = gen_polynomial(mib * MiB // 8, 0, "one", 4, 65536)
        times.append(simulate(tr, small_system, policy="sequential",
                              mode="tiered").total_time)
    assert times == sorted(times)


def test_rejects_oversized_footprint():
    system = make_system(4 * MiB, slow_capacity=8 * MiB)
    tr = gen_polynomial(16 * MiB // 8, 0, "one", 1, 65536)
    with pytest.raises(EngineError):
        simulate(tr, system, mode="tiered")
    # single-tier mode treats the fast tier as unbounded
    simulate(tr, system, mode="single_tier")


def test_rejects_bad_arguments(small_system):
    tr = gen_polynomial(1024, 0, "one", 1, 1024)
    with pytest.raises(EngineError):
        simulate(tr, small_system, mode="weird")
    with pytest.raises(EngineError):
        simulate(tr, small_system, policy="psychic")
    with pytest.raises(EngineError):
        simulate(tr, small_system, policy="sequential", k=0)
    with pytest.raises(EngineError):
        simulate(tr, small_system, policy="sequential", k=65)


def test_numa_local_write_beats_interleaved_baseline():
    numa = NumaSpec(10 * G, "local")
    system = make_system(8 * MiB, threads=8, numa=numa)
    tr = gen_stream("copy", 2 * MiB // 8, 8, 32768)
    base = simulate(tr, system, mode="single_tier")       # interleaved
    tier = simulate(tr, system, policy="sequential", mode="tiered", warm=True)
    assert tier.total_time < base.total_time
    assert efficiency(base, tier) > 1.0


def test_numa_off_efficiency_capped_at_parity(small_system):
    tr = gen_stream("copy", 2 * MiB // 8, 8, 32768)
    base = simulate(tr, small_system, mode="single_tier")
    tier = simulate(tr, small_system, policy="sequential", mode="tiered",
                    warm=True)
    assert efficiency(base, tier) <= 1.0 + 1e-9


def test_per_thread_times_max_is_total(small_system):
    tr = gen_polynomial(2 * MiB // 8, 32, "one", 5, 32768)
    res = simulate(tr, small_system, mode="single_tier")
    assert res.total_time == max(res.per_thread_time)
    assert len(res.per_thread_time) == 5


def test_reserved_fraction_shrinks_cache():
    import tiersim

    full = make_system(8 * MiB, threads=2)
    half = tiersim.SystemSpec(
        fast=full.fast, slow=full.slow, page_size=full.page_size,
        threads=full.threads, per_core_compute=full.per_core_compute,
        reserved_fraction=0.5)
    assert half.capacity_pages == full.capacity_pages // 2
    tr = gen_polynomial(8 * MiB // 8, 0, "one", 2, 65536)
    res_full = simulate(tr, full, policy="sequential", mode="tiered", warm=True)
    res_half = simulate(tr, half, policy="sequential", mode="tiered", warm=True)
    assert res_full.demand_faults + res_full.prefetch_completed == 0
    assert res_half.demand_faults + res_half.prefetch_completed > 0


def test_larger_page_size():
    system = make_system(8 * MiB, threads=2, page_size=65536)
    tr = gen_polynomial(16 * MiB // 8, 0, "one", 2, 65536)
    res = simulate(tr, system, policy="sequential", mode="tiered")
    res.check_conservation(65536)
    assert res.bytes_slow_read == (res.demand_faults + res.prefetch_completed) * 65536
    assert res.demand_faults + res.prefetch_completed == 16 * MiB // 65536


def test_bandwidth_samples_account_all_traffic(small_system):
    tr = gen_polynomial(8 * MiB // 8, 0, "one", 4, 65536)
    res = simulate(tr, small_system, policy="sequential", mode="tiered")
    fast = sum(s[1] for s in res.bandwidth_samples)
    slow = sum(s[2] for s in res.bandwidth_samples)
    width = res.bandwidth_samples[1][0] - res.bandwidth_samples[0][0]
    assert fast * width == pytest.approx(
        res.bytes_fast_read + res.bytes_fast_write, rel=1e-9)
    assert slow * width == pytest.approx(
        res.bytes_slow_read + res.bytes_slow_write, rel=1e-9)
