"""Compiled and pure kernels must agree bit-for-bit on everything."""

import pytest

from tiersim import (
    available_backends,
    backend_name,
    gen_fft3d,
    gen_gemm_tiled,
    gen_lu,
    gen_polynomial,
    gen_random,
    simulate,
)

from conftest import MiB, make_system

needs_ext = pytest.mark.skipif(
    "compiled" not in available_backends(),
    reason="compiled core not built",
)


def test_a_backend_is_always_available():
    assert backend_name() in available_backends()
    assert "pure" in available_backends()


@needs_ext
@pytest.mark.parametrize("policy", ["none", "sequential", "stride"])
@pytest.mark.parametrize("mode", ["tiered", "single_tier"])
def test_backends_bit_identical(policy, mode):
    system = make_system(2 * MiB, threads=4)
    traces = [
        gen_polynomial(MiB // 2, 16, "two", 4, 32768),
        gen_lu(64, "naive", threads=3),
        gen_lu(64, "tiled", tile=16, threads=4),
        gen_fft3d(16, 2),
        gen_gemm_tiled(64, 16, 8, 4),
        gen_random(MiB, 600, 4096, 1.0, 4, seed=13),
    ]
    for trace in traces:
        c = simulate(trace, system, policy=policy, mode=mode, warm=True,
                     backend="compiled")
        p = simulate(trace, system, policy=policy, mode=mode, warm=True,
                     backend="pure")
        assert c == p
