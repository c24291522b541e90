"""Pure-Python simulation kernel: the import-time fallback for the compiled
core.  Both backends implement the identical stepping semantics; this file
is the readable statement of them.

Semantics (shared by the compiled twin, re-derived independently by the
reference oracle, and relied on by the tests):

* Time is integer picoseconds.  All bandwidth shares are integer bytes/s and
  a flow of ``w = bytes * 10**12`` work units at rate ``r`` completes in
  ``ceil(w / r)`` ps.  No floats touch the event loop, so runs are exactly
  reproducible and backends agree bit-for-bit.
* Threads execute their blocks in order.  A block's compute proceeds
  concurrently with its page touches (duration = max of the two sides).
  Touches are classified one page at a time against the shared cache.
* A resident touch streams its bytes on the fast bus (per-socket equal
  split; an interleaved NUMA stream is additionally capped at twice its
  cross-link share).  A miss stalls the thread for the slow tier's access
  latency, then a page-sized demand fetch runs on the slow read channel.
  A touch of an in-flight page joins that transfer (promoting a prefetch to
  demand priority) with no extra latency.
* Slow-tier read bandwidth is divided equally among demand fetches; prefetch
  transfers share only the leftover, so prefetch never delays demand.
* Fetch completion admits the page: demand fetches use the destructive CLOCK
  sweep, prefetches only take an unreferenced frame (dropped otherwise).  A
  dirty victim starts a page write-back on the slow write channel and the
  fetch's waiters are released only when that write-back completes.
* Event ties break on (time, transfers-before-threads, allocation sequence);
  threads are initialized in ascending id at t=0.

Implementation notes (performance only, invisible in results): a thread
whose next touch is another hit keeps its membership and rate instead of
leaving and rejoining the bus at the same instant, and per-class transfer
rate walks are skipped while the class share is unchanged.  Both shortcuts
produce the exact end-of-event state of the naive recomputation.
"""

from __future__ import annotations

import heapq
from bisect import bisect_right

PS = 10**12

# thread states
_STREAM, _LAT, _WAIT, _BAR, _DONE = 0, 1, 2, 3, 4
# page states
_ABSENT, _RESIDENT, _INFLIGHT = 0, 1, 2
# transfer classes
_DEMAND, _PF, _WB = 0, 1, 2

_KIND_XFER = 0
_KIND_THREAD = 1

_NEW_RATE = -1  # sentinel: transfer awaits its first rate assignment


class _Xfer:
    __slots__ = ("seq", "page", "is_pf", "promoted", "useful_counted",
                 "klass", "work", "rate", "t_last", "gen", "waiters")

    def __init__(self, seq, page, is_pf, klass, work, now):
        self.seq = seq
        self.page = page
        self.is_pf = is_pf
        self.promoted = False
        self.useful_counted = False
        self.klass = klass
        self.work = work
        self.rate = _NEW_RATE
        self.t_last = now
        self.gen = 0
        self.waiters = []


def _ceil_div(a, b):
    return -(-a // b)


class SimKernel:
    """One simulation run over a flattened trace program."""

    def __init__(self, prog, cfg):
        self.page_size = cfg["page_size"]
        self.capacity = cfg["capacity_pages"]
        self.single_tier = cfg["single_tier"]
        self.n_sockets = cfg["n_sockets"]
        self.fast_rate_socket = cfg["fast_rate"] // self.n_sockets
        self.cross_rate = cfg["cross_rate"]
        self.slow_read_rate = cfg["slow_read_rate"]
        self.slow_write_rate = cfg["slow_write_rate"]
        self.latency_ps = cfg["latency_ps"]
        self.policy_kind = cfg["policy_kind"]
        self.policy_k = cfg["policy_k"]
        self.pf_cap = cfg["pf_cap"]

        def as_int_list(a):
            return a.tolist() if hasattr(a, "tolist") else [int(v) for v in a]

        self.T = prog["n_threads"]
        self.tb = as_int_list(prog["thread_block_start"])
        self.bc = as_int_list(prog["block_compute_ps"])
        self.brs = as_int_list(prog["block_run_start"])
        self.r_first = as_int_list(prog["run_first_byte"])
        self.r_len = as_int_list(prog["run_length"])
        self.r_stride = as_int_list(prog["run_stride"])
        self.r_count = as_int_list(prog["run_count"])
        self.r_kind = as_int_list(prog["run_kind"])
        self.rgn_first = as_int_list(prog["region_first_page"])
        self.rgn_last = as_int_list(prog["region_last_page"])

        T = self.T
        self.state = [_DONE] * T
        self.cur_block = [0] * T
        self.cur_run = [0] * T
        self.cur_seg = [0] * T
        self.cur_pos = [0] * T
        self.compute_end = [0] * T
        self.s_work = [0] * T
        self.s_rate = [0] * T
        self.s_tlast = [0] * T
        self.s_bytes = [0] * T
        self.gen = [0] * T
        self.end_ps = [0] * T
        self.socket = [t % self.n_sockets for t in range(T)]

        # cache (CLOCK over frames; mirrors tiers.CacheState exactly)
        self.frames = []
        self.hand = 0
        self.slot_of = {}
        self.dirty = {}
        self.ref = {}
        self.pf_untouched = set()
        self.page_state = {}
        self.page_xfer = {}

        # transfers, segregated by rate class; dicts keep insertion order
        self.by_class = ({}, {}, {})
        self.pending = []
        self.cur_share = [0, 0, 0]
        self.xfer_seq = 0
        self.n_stream = [0] * self.n_sockets
        self.n_cross = 0
        self.done = 0

        # per-(thread, region) stride-policy state
        self.pf_last = {}
        self.pf_deltas = {}

        self.heap = []

        # counters
        self.demand_faults = 0
        self.prefetch_issued = 0
        self.prefetch_completed = 0
        self.prefetch_useful = 0
        self.writebacks = 0
        self.bytes_fast_read = 0
        self.bytes_fast_write = 0
        self.bytes_slow_read = 0
        self.bytes_slow_write = 0

        # bandwidth sample bins (bytes attributed at completion events)
        self.n_bins = 512
        self.bin_width = cfg.get("bin_width_ps", 1 << 20)
        self.bins_fast = [0] * self.n_bins
        self.bins_slow = [0] * self.n_bins

        if not self.single_tier:
            for p in cfg["warm_pages"]:
                self._cache_install_free(int(p), False)

    # -- cache primitives (CLOCK second-chance) --

    def _cache_install_free(self, page, dirty):
        self.frames.append(page)
        self.slot_of[page] = len(self.frames) - 1
        self.dirty[page] = dirty
        self.ref[page] = True
        self.page_state[page] = _RESIDENT

    def _cache_evict_slot(self, slot):
        victim = self.frames[slot]
        was_dirty = self.dirty.pop(victim)
        del self.ref[victim]
        del self.slot_of[victim]
        self.page_state[victim] = _ABSENT
        self.pf_untouched.discard(victim)
        return victim, was_dirty

    def _cache_install_slot(self, slot, page):
        self.frames[slot] = page
        self.slot_of[page] = slot
        self.dirty[page] = False
        self.ref[page] = True
        self.page_state[page] = _RESIDENT

    def _admit_demand(self, page):
        """Destructive CLOCK admission; returns (victim, dirty) or None."""
        if len(self.frames) < self.capacity:
            self._cache_install_free(page, False)
            return None
        while True:
            cand = self.frames[self.hand]
            if self.ref[cand]:
                self.ref[cand] = False
                self.hand = (self.hand + 1) % self.capacity
            else:
                slot = self.hand
                evicted = self._cache_evict_slot(slot)
                self._cache_install_slot(slot, page)
                self.hand = (self.hand + 1) % self.capacity
                return evicted

    def _admit_cold(self, page):
        """Non-destructive admission for prefetched pages; returns
        (victim, dirty), None for a free-frame fill, or False to drop."""
        if len(self.frames) < self.capacity:
            self._cache_install_free(page, False)
            return None
        for step in range(self.capacity):
            slot = (self.hand + step) % self.capacity
            if not self.ref[self.frames[slot]]:
                evicted = self._cache_evict_slot(slot)
                self._cache_install_slot(slot, page)
                return evicted
        return False

    # -- rate allocation --

    def _update_fast(self, now):
        cross_share2 = 0
        if self.cross_rate and self.n_cross:
            cross_share2 = 2 * (self.cross_rate // self.n_cross)
        heap = self.heap
        for t in range(self.T):
            if self.state[t] != _STREAM:
                continue
            rate = self.fast_rate_socket // self.n_stream[self.socket[t]]
            if cross_share2 and cross_share2 < rate:
                rate = cross_share2
            if rate != self.s_rate[t]:
                self.s_work[t] -= self.s_rate[t] * (now - self.s_tlast[t])
                self.s_tlast[t] = now
                self.s_rate[t] = rate
                self.gen[t] += 1
                heapq.heappush(heap, (now + _ceil_div(self.s_work[t], rate),
                                      _KIND_THREAD, t, t, self.gen[t]))

    def _class_shares(self):
        demand, pf, wb = self.by_class
        if demand:
            d_share = self.slow_read_rate // len(demand)
            leftover = self.slow_read_rate - len(demand) * d_share
        else:
            d_share = 0
            leftover = self.slow_read_rate
        p_share = leftover // len(pf) if pf else 0
        w_share = self.slow_write_rate // len(wb) if wb else 0
        return d_share, p_share, w_share

    def _update_slow(self, now):
        shares = self._class_shares()
        heap = self.heap
        for klass in (_DEMAND, _PF, _WB):
            share = shares[klass]
            if share != self.cur_share[klass]:
                for x in self.by_class[klass].values():
                    if x.rate == _NEW_RATE:
                        continue
                    x.work -= x.rate * (now - x.t_last)
                    x.t_last = now
                    x.rate = share
                    x.gen += 1
                    if share > 0:
                        heapq.heappush(heap, (now + _ceil_div(x.work, share),
                                              _KIND_XFER, x.seq, x.seq, x.gen))
                self.cur_share[klass] = share
        if self.pending:
            for x in self.pending:
                share = shares[x.klass]
                x.rate = share
                x.t_last = now
                x.gen += 1
                if share > 0:
                    heapq.heappush(heap, (now + _ceil_div(x.work, share),
                                          _KIND_XFER, x.seq, x.seq, x.gen))
            self.pending.clear()

    # -- transfers --

    def _start_fetch(self, page, is_pf, now):
        self.xfer_seq += 1
        klass = _PF if is_pf else _DEMAND
        x = _Xfer(self.xfer_seq, page, is_pf, klass, self.page_size * PS, now)
        self.by_class[klass][x.seq] = x
        self.pending.append(x)
        self.page_state[page] = _INFLIGHT
        self.page_xfer[page] = x
        if is_pf:
            self.prefetch_issued += 1
        else:
            self.demand_faults += 1
        return x

    def _start_writeback(self, page, now):
        self.xfer_seq += 1
        x = _Xfer(self.xfer_seq, page, False, _WB, self.page_size * PS, now)
        self.by_class[_WB][x.seq] = x
        self.pending.append(x)
        return x

    def _promote(self, x, now):
        """Move an in-flight prefetch to demand priority."""
        x.promoted = True
        if x.rate != _NEW_RATE:
            x.work -= x.rate * (now - x.t_last)
            x.t_last = now
            x.rate = _NEW_RATE
            x.gen += 1
        del self.by_class[_PF][x.seq]
        x.klass = _DEMAND
        self.by_class[_DEMAND][x.seq] = x
        self.pending.append(x)

    def _free_xfer(self, x):
        del self.by_class[x.klass][x.seq]
        x.gen += 1

    # -- prefetch policy (kernel twin of prefetch.py built-ins) --

    def _region_of(self, page):
        return bisect_right(self.rgn_first, page) - 1

    def _policy_on_miss(self, thread, page, now):
        kind = self.policy_kind
        if kind == 0:
            return False
        rgn = self._region_of(page)
        k = self.policy_k
        ps = self.page_state
        reqs = []
        if kind == 2:
            key = (thread, rgn)
            prev = self.pf_last.get(key)
            if prev is not None:
                d_old, d_new = self.pf_deltas.get(key, (None, None))
                self.pf_deltas[key] = (d_new, page - prev)
            self.pf_last[key] = page
            d1, d2 = self.pf_deltas.get(key, (None, None))
            if d1 is not None and d1 == d2 and d1 != 0:
                first, last = self.rgn_first[rgn], self.rgn_last[rgn]
                for i in range(1, 2 * k + 1):
                    q = page + d1 * i
                    if q < first or q > last:
                        break
                    if ps.get(q, _ABSENT) != _RESIDENT:
                        reqs.append(q)
                        if len(reqs) == k:
                            break
                return self._issue(reqs, now)
        # sequential window
        hi = min(page + 2 * k, self.rgn_last[rgn])
        for q in range(page + 1, hi + 1):
            if ps.get(q, _ABSENT) != _RESIDENT:
                reqs.append(q)
                if len(reqs) == k:
                    break
        return self._issue(reqs, now)

    def _issue(self, reqs, now):
        started = False
        for q in reqs:
            if (self.page_state.get(q, _ABSENT) == _ABSENT
                    and len(self.by_class[_PF]) < self.pf_cap):
                self._start_fetch(q, True, now)
                started = True
        return started

    # -- thread stepping --

    def _leave_stream(self, t, now):
        self.state[t] = _WAIT
        self.n_stream[self.socket[t]] -= 1
        self.n_cross -= 1
        self._update_fast(now)

    def _advance(self, t, now, streaming=False):
        """Process touches until the thread blocks.  ``streaming`` means the
        thread is still counted on the fast bus from the touch that just
        completed; it stays counted across consecutive hits."""
        tb_end = self.tb[t + 1]
        while True:
            b = self.cur_block[t]
            r = self.cur_run[t]
            if r == self.brs[b + 1]:
                ce = self.compute_end[t]
                if ce > now:
                    if streaming:
                        self._leave_stream(t, now)
                    self.state[t] = _BAR
                    self.gen[t] += 1
                    heapq.heappush(self.heap, (ce, _KIND_THREAD, t, t, self.gen[t]))
                    return
                b += 1
                if b == tb_end:
                    if streaming:
                        self._leave_stream(t, now)
                    self.state[t] = _DONE
                    self.end_ps[t] = now
                    self.done += 1
                    return
                self.cur_block[t] = b
                self.compute_end[t] = now + self.bc[b]
                self.cur_run[t] = self.brs[b]
                self.cur_seg[t] = 0
                self.cur_pos[t] = 0
                continue
            length = self.r_len[r]
            pos = self.cur_pos[t]
            addr = self.r_first[r] + self.cur_seg[t] * self.r_stride[r] + pos
            page = addr // self.page_size
            nbytes = min(length - pos, (page + 1) * self.page_size - addr)
            write = self.r_kind[r] == 1
            st = _RESIDENT if self.single_tier else self.page_state.get(page, _ABSENT)
            if st == _RESIDENT:
                # consume the touch and stream it on the fast bus
                pos += nbytes
                if pos == length:
                    self.cur_pos[t] = 0
                    seg = self.cur_seg[t] + 1
                    if seg == self.r_count[r]:
                        self.cur_seg[t] = 0
                        self.cur_run[t] = r + 1
                    else:
                        self.cur_seg[t] = seg
                else:
                    self.cur_pos[t] = pos
                if not self.single_tier:
                    if page in self.pf_untouched:
                        self.pf_untouched.discard(page)
                        self.prefetch_useful += 1
                    self.ref[page] = True
                    if write:
                        self.dirty[page] = True
                if write:
                    self.bytes_fast_write += nbytes
                else:
                    self.bytes_fast_read += nbytes
                self.s_work[t] = nbytes * PS
                self.s_tlast[t] = now
                self.s_bytes[t] = nbytes
                if streaming:
                    # same membership, same rate: just schedule the touch
                    self.gen[t] += 1
                    heapq.heappush(self.heap,
                                   (now + _ceil_div(self.s_work[t], self.s_rate[t]),
                                    _KIND_THREAD, t, t, self.gen[t]))
                else:
                    self.state[t] = _STREAM
                    self.s_rate[t] = 0
                    self.n_stream[self.socket[t]] += 1
                    self.n_cross += 1
                    self._update_fast(now)
                return
            if streaming:
                self._leave_stream(t, now)
                streaming = False
            if st == _INFLIGHT:
                x = self.page_xfer[page]
                if x.is_pf and not x.useful_counted:
                    x.useful_counted = True
                    self.prefetch_useful += 1
                promote = x.is_pf and not x.promoted
                if promote:
                    self._promote(x, now)
                started = self._policy_on_miss(t, page, now)
                if promote or started:
                    self._update_slow(now)
                x.waiters.append(t)
                self.state[t] = _WAIT
                return
            # absent: demand fault path (counted when the fetch starts)
            started = self._policy_on_miss(t, page, now)
            if self.latency_ps > 0:
                if started:
                    self._update_slow(now)
                self.state[t] = _LAT
                self.gen[t] += 1
                heapq.heappush(self.heap,
                               (now + self.latency_ps, _KIND_THREAD, t, t, self.gen[t]))
                return
            x = self._start_fetch(page, False, now)
            x.waiters.append(t)
            self.state[t] = _WAIT
            self._update_slow(now)
            return

    # -- event handlers --

    def _sample(self, bins, now, nbytes):
        idx = now // self.bin_width
        while idx >= self.n_bins:
            fast, slow = self.bins_fast, self.bins_slow
            half = self.n_bins // 2
            for i in range(half):
                fast[i] = fast[2 * i] + fast[2 * i + 1]
                slow[i] = slow[2 * i] + slow[2 * i + 1]
            for i in range(half, self.n_bins):
                fast[i] = 0
                slow[i] = 0
            self.bin_width *= 2
            idx = now // self.bin_width
        bins[idx] += nbytes

    def _peek_page(self, t):
        """Page of the thread's pending (unconsumed) touch."""
        r = self.cur_run[t]
        addr = self.r_first[r] + self.cur_seg[t] * self.r_stride[r] + self.cur_pos[t]
        return addr // self.page_size

    def _latency_expired(self, t, now):
        # the page may have arrived (or begun arriving) during the stall
        page = self._peek_page(t)
        st = self.page_state.get(page, _ABSENT)
        if st == _RESIDENT:
            self._advance(t, now)
            return
        if st == _INFLIGHT:
            x = self.page_xfer[page]
            if x.is_pf and not x.useful_counted:
                x.useful_counted = True
                self.prefetch_useful += 1
            if x.is_pf and not x.promoted:
                self._promote(x, now)
                self._update_slow(now)
            x.waiters.append(t)
            self.state[t] = _WAIT
            return
        x = self._start_fetch(page, False, now)
        x.waiters.append(t)
        self.state[t] = _WAIT
        self._update_slow(now)

    def _fetch_done(self, x, now):
        page = x.page
        self._free_xfer(x)
        del self.page_xfer[page]
        self.bytes_slow_read += self.page_size
        self._sample(self.bins_slow, now, self.page_size)
        if x.is_pf:
            self.prefetch_completed += 1
        destructive = (not x.is_pf) or x.promoted
        if destructive:
            evicted = self._admit_demand(page)
        else:
            evicted = self._admit_cold(page)
            if evicted is False:  # no cold frame: drop the fill
                self.page_state[page] = _ABSENT
                self._update_slow(now)
                return
        if x.is_pf and not x.useful_counted:
            self.pf_untouched.add(page)
        if evicted is not None and evicted[1]:
            wb = self._start_writeback(evicted[0], now)
            wb.waiters = x.waiters
            self._update_slow(now)
        else:
            self._update_slow(now)
            for t in x.waiters:
                self._advance(t, now)

    def _wb_done(self, x, now):
        self._free_xfer(x)
        self.writebacks += 1
        self.bytes_slow_write += self.page_size
        self._sample(self.bins_slow, now, self.page_size)
        self._update_slow(now)
        for t in x.waiters:
            self._advance(t, now)

    # -- main loop --

    def run(self):
        heap = self.heap
        for t in range(self.T):
            if self.tb[t] == self.tb[t + 1]:
                self.state[t] = _DONE
                self.done += 1
            else:
                b = self.tb[t]
                self.cur_block[t] = b
                self.compute_end[t] = self.bc[b]
                self.cur_run[t] = self.brs[b]
                self.state[t] = _WAIT  # marker: advanced below
        for t in range(self.T):
            if self.state[t] == _WAIT:
                self._advance(t, 0)

        by_class = self.by_class
        while self.done < self.T:
            time, kind, seq, idx, egen = heapq.heappop(heap)
            if kind == _KIND_XFER:
                x = (by_class[_DEMAND].get(seq) or by_class[_PF].get(seq)
                     or by_class[_WB].get(seq))
                if x is None or x.gen != egen:
                    continue
                x.work = 0
                if x.klass == _WB:
                    self._wb_done(x, time)
                else:
                    self._fetch_done(x, time)
            else:
                t = idx
                if self.gen[t] != egen:
                    continue
                st = self.state[t]
                if st == _STREAM:
                    self._sample(self.bins_fast, time, self.s_bytes[t])
                    self.s_work[t] = 0
                    self._advance(t, time, streaming=True)
                elif st == _LAT:
                    self._latency_expired(t, time)
                elif st == _BAR:
                    self._advance(t, time)

        total = max(self.end_ps) if self.end_ps else 0
        return {
            "time_ps": total,
            "per_thread_ps": list(self.end_ps),
            "demand_faults": self.demand_faults,
            "prefetch_issued": self.prefetch_issued,
            "prefetch_completed": self.prefetch_completed,
            "prefetch_useful": self.prefetch_useful,
            "writebacks": self.writebacks,
            "bytes_fast_read": self.bytes_fast_read,
            "bytes_fast_write": self.bytes_fast_write,
            "bytes_slow_read": self.bytes_slow_read,
            "bytes_slow_write": self.bytes_slow_write,
            "bin_width_ps": self.bin_width,
            "bins_fast": list(self.bins_fast),
            "bins_slow": list(self.bins_slow),
        }


def run_sim(prog, cfg):
    return SimKernel(prog, cfg).run()
