"""Literal event-queue simulator used as the verification oracle.

Everything is spelled out: every page touch is classified against a real
``CacheState``, prefetch decisions come from the actual policy objects in
``prefetch``, all in-progress flows are advanced by a global clock at every
event, and bandwidth shares are recomputed from scratch after every event.
No closed-form shortcuts.  Runs in the same integer-picosecond clock as the
production kernels and must agree with them exactly; the equivalence test
suite holds the two routes together.
"""

from __future__ import annotations

import heapq
from bisect import bisect_right

from .prefetch import AccessEvent, make_policy
from .tiers import CacheFullError, CacheState, SystemSpec
from .workloads import AccessKind, Trace

PS = 10**12

_STREAM, _LAT, _WAIT, _BAR, _DONE = 0, 1, 2, 3, 4


class _Xfer:
    __slots__ = ("seq", "page", "is_pf", "promoted", "useful_counted",
                 "is_wb", "work", "rate", "gen", "waiters")

    def __init__(self, seq, page, is_pf, is_wb, work):
        self.seq = seq
        self.page = page
        self.is_pf = is_pf
        self.promoted = False
        self.useful_counted = False
        self.is_wb = is_wb
        self.work = work
        self.rate = 0
        self.gen = 0
        self.waiters = []


def _expand_blocks(trace: Trace, page_size: int):
    """Per-thread [(compute_flops, [(page, bytes, write), ...])] lists with
    global page ids; segments split at page boundaries."""
    spans = trace.region_page_spans(page_size)
    per_thread = [[] for _ in range(trace.num_threads)]
    for block in trace.blocks:
        touches = []
        for run in block.runs:
            base = spans[run.region].first * page_size + run.offset
            write = run.kind == AccessKind.WRITE
            for i in range(run.count):
                start = base + i * run.stride
                remaining = run.length
                while remaining > 0:
                    page = start // page_size
                    in_page = min(remaining, (page + 1) * page_size - start)
                    touches.append((page, in_page, write))
                    start += in_page
                    remaining -= in_page
        per_thread[block.thread].append((block.flops, touches))
    return per_thread, spans


def run(trace: Trace, system: SystemSpec, policy_name: str, mode: str,
        k: int, warm_pages, pf_cap: int) -> dict:
    page_size = system.page_size
    single = mode == "single_tier"
    blocks, spans = _expand_blocks(trace, page_size)
    T = len(blocks)
    cores = system.threads
    per_core = system.per_core_compute

    def compute_ps(flops: int) -> int:
        if T <= cores:
            return -(-flops * PS // per_core)
        return -(-flops * PS * T // (per_core * cores))

    numa = system.numa
    if numa is None:
        n_sockets, cross_rate = 1, 0
    elif single:
        n_sockets, cross_rate = 2, numa.cross_link_bandwidth
    else:
        n_sockets = 2
        cross_rate = (numa.cross_link_bandwidth
                      if numa.write_placement == "interleaved" else 0)
    fast_rate_socket = system.fast.read_bandwidth // n_sockets
    slow_read = system.slow.read_bandwidth
    slow_write = system.slow.write_bandwidth
    latency_ps = round(system.slow.access_latency * PS)

    cache = CacheState(system.capacity_pages)
    for p in warm_pages:
        cache.admit(int(p), dirty=False)
    policy = make_policy(policy_name, spans, k) if not single else None
    region_firsts = sorted(s.first for s in spans.values())
    first_to_id = {s.first: rid for rid, s in spans.items()}

    inflight: dict[int, _Xfer] = {}
    pf_untouched: set[int] = set()
    xfers: dict[int, _Xfer] = {}
    seq_counter = 0

    state = [_DONE] * T
    blk_i = [0] * T
    touch_i = [0] * T
    compute_end = [0] * T
    work = [0] * T
    rate = [0] * T
    sbytes = [0] * T
    gen = [0] * T
    end_ps = [0] * T
    socket = [t % n_sockets for t in range(T)]

    counters = dict(demand_faults=0, prefetch_issued=0, prefetch_completed=0,
                    prefetch_useful=0, writebacks=0, bytes_fast_read=0,
                    bytes_fast_write=0, bytes_slow_read=0, bytes_slow_write=0)

    n_bins = 512
    bin_width = 1 << 20
    bins_fast = [0] * n_bins
    bins_slow = [0] * n_bins

    def sample(bins, now, nbytes):
        nonlocal bin_width
        idx = now // bin_width
        while idx >= n_bins:
            half = n_bins // 2
            for i in range(half):
                bins_fast[i] = bins_fast[2 * i] + bins_fast[2 * i + 1]
                bins_slow[i] = bins_slow[2 * i] + bins_slow[2 * i + 1]
            for i in range(half, n_bins):
                bins_fast[i] = 0
                bins_slow[i] = 0
            bin_width *= 2
            idx = now // bin_width
        bins[idx] += nbytes

    heap: list[tuple] = []
    done = 0
    last_clock = 0

    def region_of(page: int) -> int:
        return first_to_id[region_firsts[bisect_right(region_firsts, page) - 1]]

    def start_fetch(page: int, is_pf: bool) -> _Xfer:
        nonlocal seq_counter
        seq_counter += 1
        x = _Xfer(seq_counter, page, is_pf, False, page_size * PS)
        xfers[x.seq] = x
        inflight[page] = x
        if is_pf:
            counters["prefetch_issued"] += 1
        else:
            counters["demand_faults"] += 1
        return x

    def start_writeback(page: int) -> _Xfer:
        nonlocal seq_counter
        seq_counter += 1
        x = _Xfer(seq_counter, page, False, True, page_size * PS)
        xfers[x.seq] = x
        return x

    def policy_miss(t: int, page: int, write: bool, now: int) -> None:
        if policy is None:
            return
        ev = AccessEvent(thread=t, region=region_of(page), page=page,
                         write=write, hit=False, time=now / PS)
        n_pf = sum(1 for x in xfers.values()
                   if x.is_pf and not x.promoted and not x.is_wb)
        for req in policy.on_event(ev, cache.is_resident):
            q = req.page
            if cache.is_resident(q) or q in inflight:
                continue
            if n_pf >= pf_cap:
                break
            start_fetch(q, True)
            n_pf += 1

    def global_advance(now: int) -> None:
        nonlocal last_clock
        dt = now - last_clock
        if dt:
            for t in range(T):
                if state[t] == _STREAM and rate[t]:
                    work[t] -= rate[t] * dt
            for x in xfers.values():
                if x.rate:
                    x.work -= x.rate * dt
            last_clock = now

    def recompute_rates(now: int) -> None:
        n_stream = [0] * n_sockets
        for t in range(T):
            if state[t] == _STREAM:
                n_stream[socket[t]] += 1
        n_cross = sum(n_stream)
        cross_share2 = 0
        if cross_rate and n_cross:
            cross_share2 = 2 * (cross_rate // n_cross)
        for t in range(T):
            if state[t] != _STREAM:
                continue
            r = fast_rate_socket // n_stream[socket[t]]
            if cross_share2 and cross_share2 < r:
                r = cross_share2
            if r != rate[t]:
                rate[t] = r
                gen[t] += 1
                heapq.heappush(heap, (now + -(-work[t] // r), 1, t, gen[t]))
        n_demand = sum(1 for x in xfers.values()
                       if not x.is_wb and (not x.is_pf or x.promoted))
        n_pf = sum(1 for x in xfers.values()
                   if not x.is_wb and x.is_pf and not x.promoted)
        n_wb = sum(1 for x in xfers.values() if x.is_wb)
        d_share = slow_read // n_demand if n_demand else 0
        leftover = slow_read - n_demand * d_share if n_demand else slow_read
        p_share = leftover // n_pf if n_pf else 0
        w_share = slow_write // n_wb if n_wb else 0
        for x in xfers.values():
            if x.is_wb:
                r = w_share
            elif not x.is_pf or x.promoted:
                r = d_share
            else:
                r = p_share
            if r != x.rate:
                x.rate = r
                x.gen += 1
                if r > 0:
                    heapq.heappush(heap, (now + -(-x.work // r), 0, x.seq, x.gen))

    def advance(t: int, now: int) -> None:
        nonlocal done
        while True:
            if blk_i[t] >= len(blocks[t]):
                state[t] = _DONE
                end_ps[t] = now
                done += 1
                return
            flops, touches = blocks[t][blk_i[t]]
            if touch_i[t] == 0 and compute_end[t] == -1:
                compute_end[t] = now + compute_ps(flops)
            if touch_i[t] >= len(touches):
                if compute_end[t] > now:
                    state[t] = _BAR
                    gen[t] += 1
                    heapq.heappush(heap, (compute_end[t], 1, t, gen[t]))
                    return
                blk_i[t] += 1
                touch_i[t] = 0
                compute_end[t] = -1
                continue
            page, nbytes, write = touches[touch_i[t]]
            resident = True if single else cache.is_resident(page)
            if resident:
                touch_i[t] += 1
                if not single:
                    if page in pf_untouched:
                        pf_untouched.discard(page)
                        counters["prefetch_useful"] += 1
                    cache.touch(page, write)
                if write:
                    counters["bytes_fast_write"] += nbytes
                else:
                    counters["bytes_fast_read"] += nbytes
                state[t] = _STREAM
                work[t] = nbytes * PS
                rate[t] = 0
                sbytes[t] = nbytes
                return
            if page in inflight:
                x = inflight[page]
                if x.is_pf and not x.useful_counted:
                    x.useful_counted = True
                    counters["prefetch_useful"] += 1
                if x.is_pf and not x.promoted:
                    x.promoted = True
                policy_miss(t, page, write, now)
                x.waiters.append(t)
                state[t] = _WAIT
                return
            policy_miss(t, page, write, now)
            if latency_ps > 0:
                state[t] = _LAT
                gen[t] += 1
                heapq.heappush(heap, (now + latency_ps, 1, t, gen[t]))
                return
            x = start_fetch(page, False)
            x.waiters.append(t)
            state[t] = _WAIT
            return

    def fetch_done(x: _Xfer, now: int) -> None:
        page = x.page
        del xfers[x.seq]
        del inflight[page]
        counters["bytes_slow_read"] += page_size
        sample(bins_slow, now, page_size)
        if x.is_pf:
            counters["prefetch_completed"] += 1
        destructive = (not x.is_pf) or x.promoted
        if destructive:
            evicted = cache.admit(page, dirty=False)
        else:
            try:
                evicted = cache.admit_cold(page, dirty=False)
            except CacheFullError:
                return  # dropped fill
        if evicted is not None:
            pf_untouched.discard(evicted[0])
        if x.is_pf and not x.useful_counted:
            pf_untouched.add(page)
        if evicted is not None and evicted[1]:
            wb = start_writeback(evicted[0])
            wb.waiters = x.waiters
        else:
            for t in x.waiters:
                advance(t, now)

    def wb_done(x: _Xfer, now: int) -> None:
        del xfers[x.seq]
        counters["writebacks"] += 1
        counters["bytes_slow_write"] += page_size
        sample(bins_slow, now, page_size)
        for t in x.waiters:
            advance(t, now)

    # threads start at t=0 in ascending id order
    started = [False] * T
    for t in range(T):
        if not blocks[t]:
            state[t] = _DONE
            done += 1
            started[t] = True
    for t in range(T):
        if not started[t]:
            compute_end[t] = -1
            state[t] = _WAIT
            advance(t, 0)
    recompute_rates(0)

    while done < T:
        entry = heapq.heappop(heap)
        now, kind, ident, egen = entry
        if kind == 0:
            x = xfers.get(ident)
            if x is None or x.gen != egen:
                continue
            global_advance(now)
            x.work = 0
            if x.is_wb:
                wb_done(x, now)
            else:
                fetch_done(x, now)
            recompute_rates(now)
        else:
            t = ident
            if gen[t] != egen:
                continue
            global_advance(now)
            st = state[t]
            if st == _STREAM:
                sample(bins_fast, now, sbytes[t])
                work[t] = 0
                rate[t] = 0
                state[t] = _WAIT
                advance(t, now)
            elif st == _LAT:
                # the page may have arrived (or begun arriving) meanwhile
                flops, touches = blocks[t][blk_i[t]]
                page, nbytes, write = touches[touch_i[t]]
                if cache.is_resident(page):
                    advance(t, now)
                elif page in inflight:
                    x = inflight[page]
                    if x.is_pf and not x.useful_counted:
                        x.useful_counted = True
                        counters["prefetch_useful"] += 1
                    if x.is_pf and not x.promoted:
                        x.promoted = True
                    x.waiters.append(t)
                    state[t] = _WAIT
                else:
                    x = start_fetch(page, False)
                    x.waiters.append(t)
                    state[t] = _WAIT
            elif st == _BAR:
                advance(t, now)
            else:
                continue
            recompute_rates(now)

    total = max(end_ps) if end_ps else 0
    out = dict(counters)
    out["time_ps"] = total
    out["per_thread_ps"] = list(end_ps)
    out["bin_width_ps"] = bin_width
    out["bins_fast"] = bins_fast
    out["bins_slow"] = bins_slow
    return out
