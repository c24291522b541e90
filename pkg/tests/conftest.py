import pytest

from tiersim import SystemSpec, TierSpec

G = 10**9
MiB = 1024 * 1024


def make_system(fast_capacity, *, threads=8, per_core=35_200_000_000,
                slow_capacity=None, fast_bw=80 * G, slow_read=10 * G,
                slow_write=8 * G, latency=10e-6, page_size=4096, numa=None):
    """System with the reference bandwidth/compute profile at a test-sized
    capacity; slow tier defaults to 256x the fast tier."""
    return SystemSpec(
        fast=TierSpec("fast", fast_capacity, fast_bw, fast_bw, 0.0),
        slow=TierSpec("slow", slow_capacity or 256 * fast_capacity,
                      slow_read, slow_write, latency),
        page_size=page_size,
        threads=threads,
        per_core_compute=per_core,
        numa=numa,
    )


@pytest.fixture
def tiny_system():
    """16-page cache; handy for hand-checkable paging behavior."""
    return make_system(16 * 4096, threads=4)


@pytest.fixture
def small_system():
    """8 MiB fast tier, 8 cores, reference bandwidth ratios."""
    return make_system(8 * MiB, threads=8)
