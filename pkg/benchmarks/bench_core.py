#!/usr/bin/env python3
"""Benchmark the compiled simulation core against the pure-Python fallback.

Runs identical simulations on both backends, checks that results agree
bit-for-bit, and reports wall time and page-touch throughput.

    python benchmarks/bench_core.py [--heavy]
"""

import argparse
import time

from tiersim import (
    SystemSpec,
    TierSpec,
    available_backends,
    gen_fft3d,
    gen_lu,
    gen_polynomial,
    gen_stream,
    simulate,
)
from tiersim.workloads import count_page_touches

G = 10**9
MiB = 1024 * 1024


def make_system(fast_capacity, threads=8, per_core=35_200_000_000):
    return SystemSpec(
        fast=TierSpec("fast", fast_capacity, 80 * G, 80 * G, 0.0),
        slow=TierSpec("slow", 256 * fast_capacity, 10 * G, 8 * G, 10e-6),
        page_size=4096,
        threads=threads,
        per_core_compute=per_core,
    )


def cases(heavy: bool):
    yield ("stream-hit (warm, ratio 0.5)",
           gen_stream("triad", 2 * MiB // 24, 8, 32768),
           make_system(8 * MiB), "sequential", True)
    yield ("poly-miss (cold, ratio 2)",
           gen_polynomial(16 * MiB // 8, 0, "one", 8, 65536),
           make_system(8 * MiB), "sequential", False)
    yield ("fft strided (warm, ratio 1.3)",
           gen_fft3d(88, 8), make_system(8 * MiB), "sequential", True)
    n = 192 if heavy else 96
    yield (f"lu-naive thrash (n={n}, ratio 3)",
           gen_lu(n, "naive", threads=4),
           make_system(8 * n * n // 3, threads=4, per_core=6_670_000_000),
           "stride", True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--heavy", action="store_true",
                        help="larger LU case (slow on the pure backend)")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled core not built; timing the pure backend only")

    header = f"{'case':38s} {'touches':>10s}"
    for b in backends:
        header += f" {b + ' [s]':>14s} {b + ' [Mt/s]':>14s}"
    if len(backends) == 2:
        header += f" {'speedup':>9s}"
    print(header)

    for name, trace, system, policy, warm in cases(args.heavy):
        touches = count_page_touches(trace, system.page_size)
        row = f"{name:38s} {touches:>10d}"
        results = {}
        times = {}
        for backend in backends:
            t0 = time.perf_counter()
            results[backend] = simulate(trace, system, policy=policy,
                                        mode="tiered", warm=warm,
                                        backend=backend)
            times[backend] = time.perf_counter() - t0
            rate = touches / times[backend] / 1e6
            row += f" {times[backend]:>14.3f} {rate:>14.2f}"
        if len(backends) == 2:
            assert results["compiled"] == results["pure"], \
                f"backend mismatch on {name}"
            row += f" {times['pure'] / times['compiled']:>8.1f}x"
        print(row)

    if len(backends) == 2:
        print("results agree bit-for-bit across backends")


if __name__ == "__main__":
    main()
