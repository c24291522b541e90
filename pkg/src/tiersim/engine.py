"""Trace simulation: demand paging against the fast-tier cache, prefetch,
write-back, bandwidth sharing, and compute/transfer overlap.

Two independent implementations back the same contract:

* :func:`simulate` -- the production path.  It flattens the trace into array
  form and steps it in a compiled kernel (pure-Python twin selected at
  import when the extension is unavailable; see ``_backend``).
* :func:`simulate_reference` -- a deliberately literal event-queue
  simulator over individual page touches and transfers, kept small enough
  to audit.  It exists to cross-check the production path and refuses
  traces above a touch budget.

Both engines do all time accounting in integer picoseconds, so a given
(trace, system, policy, mode) input yields bit-identical results across
runs, platforms, and backends.  The model semantics shared by the two
implementations are spelled out in ``_core_py``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .tiers import CacheState, SystemSpec
from .workloads import Trace, iter_page_touches
from .prefetch import POLICY_KINDS, DEFAULT_LOOKAHEAD

PS = 10**12
REFERENCE_TOUCH_LIMIT = 100_000
PREFETCH_INFLIGHT_CAP = 64

MODES = ("tiered", "single_tier")


class EngineError(ValueError):
    """Simulation inputs violate an engine precondition."""


@dataclass(frozen=True)
class SimResult:
    """Outcome of one simulation run.

    Times are seconds (derived from the integer picosecond fields, which are
    the exact quantities).  Byte counters satisfy, exactly:
    ``bytes_slow_read == page_size * (demand_faults + prefetch_completed)``
    and ``bytes_slow_write == page_size * writebacks``.
    """

    mode: str
    total_time: float
    per_thread_time: tuple[float, ...]
    demand_faults: int
    prefetch_issued: int
    prefetch_completed: int
    prefetch_useful: int
    writebacks: int
    bytes_fast_read: int
    bytes_fast_write: int
    bytes_slow_read: int
    bytes_slow_write: int
    bandwidth_samples: tuple[tuple[float, float, float], ...]
    total_time_ps: int
    per_thread_time_ps: tuple[int, ...]

    def check_conservation(self, page_size: int) -> None:
        assert self.total_time_ps == max(self.per_thread_time_ps, default=0)
        assert self.bytes_slow_read == page_size * (
            self.demand_faults + self.prefetch_completed
        )
        assert self.bytes_slow_write == page_size * self.writebacks

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "total_time_s": self.total_time,
            "per_thread_time_s": list(self.per_thread_time),
            "demand_faults": self.demand_faults,
            "prefetch_issued": self.prefetch_issued,
            "prefetch_completed": self.prefetch_completed,
            "prefetch_useful": self.prefetch_useful,
            "writebacks": self.writebacks,
            "bytes_fast_read": self.bytes_fast_read,
            "bytes_fast_write": self.bytes_fast_write,
            "bytes_slow_read": self.bytes_slow_read,
            "bytes_slow_write": self.bytes_slow_write,
        }


def build_program(trace: Trace, system: SystemSpec) -> dict:
    """Flatten a trace into the array form the kernels consume.

    Blocks are grouped per thread (stable order), runs resolved to global
    byte addresses, and compute durations fixed in integer picoseconds with
    the thread-oversubscription rate scaling applied.
    """
    T = trace.num_threads
    cores = system.threads
    per_core = system.per_core_compute
    spans = trace.region_page_spans(system.page_size)

    per_thread: list[list[int]] = [[] for _ in range(T)]
    for i, b in enumerate(trace.blocks):
        per_thread[b.thread].append(i)

    n_blocks = len(trace.blocks)
    thread_block_start = np.zeros(T + 1, dtype=np.int64)
    block_compute = np.zeros(n_blocks, dtype=np.int64)
    block_run_start = np.zeros(n_blocks + 1, dtype=np.int64)

    runs_region = []
    runs_first = []
    runs_len = []
    runs_stride = []
    runs_count = []
    runs_kind = []

    bi = 0
    for t in range(T):
        thread_block_start[t] = bi
        for src in per_thread[t]:
            b = trace.blocks[src]
            flops = b.flops
            if T <= cores:
                dur = -(-flops * PS // per_core)
            else:
                dur = -(-flops * PS * T // (per_core * cores))
            if dur >= 2**62:
                raise EngineError("block compute duration overflows the clock")
            block_compute[bi] = dur
            block_run_start[bi] = len(runs_first)
            for run in b.runs:
                base = spans[run.region].first * system.page_size
                runs_region.append(run.region)
                runs_first.append(base + run.offset)
                runs_len.append(run.length)
                runs_stride.append(run.stride)
                runs_count.append(run.count)
                runs_kind.append(int(run.kind))
            bi += 1
        thread_block_start[t + 1] = bi
    block_run_start[n_blocks] = len(runs_first)

    region_first = np.array(
        [spans[r.id].first for r in trace.regions], dtype=np.int64
    )
    region_last = np.array(
        [spans[r.id].last for r in trace.regions], dtype=np.int64
    )
    order = np.argsort(region_first, kind="stable")
    return {
        "n_threads": T,
        "thread_block_start": thread_block_start,
        "block_compute_ps": block_compute,
        "block_run_start": block_run_start,
        "run_first_byte": np.array(runs_first, dtype=np.int64),
        "run_length": np.array(runs_len, dtype=np.int64),
        "run_stride": np.array(runs_stride, dtype=np.int64),
        "run_count": np.array(runs_count, dtype=np.int64),
        "run_kind": np.array(runs_kind, dtype=np.int64),
        "region_first_page": region_first[order],
        "region_last_page": region_last[order],
        "total_pages": trace.total_pages(system.page_size),
    }


def _warm_page_list(warm, trace: Trace, system: SystemSpec) -> list[int]:
    if warm is None or warm is False:
        return []
    if warm is True:
        warm = warmup(trace, system)
    if isinstance(warm, CacheState):
        if warm.capacity_pages != system.capacity_pages:
            raise EngineError("warm cache capacity does not match the system")
        return list(warm.resident_pages())
    return [int(p) for p in warm]


def _validate(trace: Trace, system: SystemSpec, policy: str, mode: str) -> None:
    if mode not in MODES:
        raise EngineError(f"mode must be one of {MODES}, got {mode!r}")
    if policy not in POLICY_KINDS:
        raise EngineError(f"unknown prefetch policy {policy!r}")
    if mode == "tiered":
        footprint = trace.total_pages(system.page_size) * system.page_size
        if footprint > system.slow.capacity:
            raise EngineError(
                f"trace footprint {footprint} B exceeds slow tier capacity "
                f"{system.slow.capacity} B"
            )


def _build_cfg(trace: Trace, system: SystemSpec, policy: str, mode: str,
               k: int, warm_pages: list[int]) -> dict:
    single = mode == "single_tier"
    numa = system.numa
    if numa is None:
        n_sockets, cross = 1, 0
    else:
        n_sockets = 2
        if single:
            # the all-fast baseline pays interleaved cross-socket traffic
            cross = numa.cross_link_bandwidth
        else:
            cross = (numa.cross_link_bandwidth
                     if numa.write_placement == "interleaved" else 0)
    return {
        "page_size": system.page_size,
        "capacity_pages": system.capacity_pages,
        "single_tier": single,
        "n_sockets": n_sockets,
        "fast_rate": system.fast.read_bandwidth,
        "cross_rate": cross,
        "slow_read_rate": system.slow.read_bandwidth,
        "slow_write_rate": system.slow.write_bandwidth,
        "latency_ps": round(system.slow.access_latency * PS),
        "policy_kind": POLICY_KINDS[policy],
        "policy_k": k,
        "pf_cap": PREFETCH_INFLIGHT_CAP,
        "warm_pages": warm_pages,
    }


def _wrap_result(raw: dict, mode: str) -> SimResult:
    # normalize to plain Python scalars whatever the backend produced
    total_ps = int(raw["time_ps"])
    per_thread_ps = tuple(int(p) for p in raw["per_thread_ps"])
    width = int(raw["bin_width_ps"])
    samples = []
    for i, (bf, bs) in enumerate(zip(raw["bins_fast"], raw["bins_slow"])):
        t0 = i * width
        if t0 > total_ps:
            break
        w_s = width / PS
        samples.append((t0 / PS, int(bf) / w_s, int(bs) / w_s))
    return SimResult(
        mode=mode,
        total_time=total_ps / PS,
        per_thread_time=tuple(p / PS for p in per_thread_ps),
        demand_faults=int(raw["demand_faults"]),
        prefetch_issued=int(raw["prefetch_issued"]),
        prefetch_completed=int(raw["prefetch_completed"]),
        prefetch_useful=int(raw["prefetch_useful"]),
        writebacks=int(raw["writebacks"]),
        bytes_fast_read=int(raw["bytes_fast_read"]),
        bytes_fast_write=int(raw["bytes_fast_write"]),
        bytes_slow_read=int(raw["bytes_slow_read"]),
        bytes_slow_write=int(raw["bytes_slow_write"]),
        bandwidth_samples=tuple(samples),
        total_time_ps=total_ps,
        per_thread_time_ps=per_thread_ps,
    )


def simulate(trace: Trace, system: SystemSpec, policy: str = "none",
             mode: str = "tiered", k: int = DEFAULT_LOOKAHEAD,
             warm=None, backend: str | None = None) -> SimResult:
    """Run a trace on a system; see the module docstring for the model.

    ``warm`` may be True (build and use :func:`warmup`), a ``CacheState``,
    an iterable of pages in admission order, or None for a cold cache.
    ``backend`` forces "compiled" or "pure" (default: best available).
    """
    _validate(trace, system, policy, mode)
    if not 1 <= k <= PREFETCH_INFLIGHT_CAP:
        raise EngineError(f"prefetch lookahead k must be in [1, {PREFETCH_INFLIGHT_CAP}]")
    warm_pages = _warm_page_list(warm, trace, system)
    prog = build_program(trace, system)
    cfg = _build_cfg(trace, system, policy, mode, k, warm_pages)
    raw = _backend.run_sim(prog, cfg, backend=backend)
    return _wrap_result(raw, mode)


def simulate_reference(trace: Trace, system: SystemSpec, policy: str = "none",
                       mode: str = "tiered", k: int = DEFAULT_LOOKAHEAD,
                       warm=None,
                       touch_limit: int = REFERENCE_TOUCH_LIMIT) -> SimResult:
    """Brute-force oracle with the same contract as :func:`simulate`.

    Walks every page touch through a literal event queue.  Refuses traces
    above ``touch_limit`` touches to guard against runaway runtime.
    """
    from . import _reference

    _validate(trace, system, policy, mode)
    n = 0
    for _ in iter_page_touches(trace, system.page_size):
        n += 1
        if n > touch_limit:
            raise EngineError(
                f"reference simulator limited to {touch_limit} page touches"
            )
    warm_pages = _warm_page_list(warm, trace, system)
    raw = _reference.run(trace, system, policy, mode, k, warm_pages,
                         PREFETCH_INFLIGHT_CAP)
    return _wrap_result(raw, mode)


def warmup(trace: Trace, system: SystemSpec) -> CacheState:
    """Cache pre-populated with the trace's first-touched pages.

    Admits pages in first-touch order (trace block order) until the cache
    is full or the trace has no further new pages, so an in-cache workload
    measures steady state rather than cold faults.
    """
    cache = CacheState(system.capacity_pages)
    seen = set()
    for _, page, _, _ in iter_page_touches(trace, system.page_size):
        if page in seen:
            continue
        seen.add(page)
        cache.admit(page, dirty=False)
        if len(cache) == cache.capacity_pages:
            break
    return cache
