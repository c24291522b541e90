# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel: hot-loop twin of ``_core_py``.

Same semantics, same integer-picosecond arithmetic, same tie-breaking; the
only differences are data layout (flat C arrays and intrusive linked lists
instead of dicts) and an in-place binary heap.  The backend cross-check and
oracle equivalence suites hold all implementations to bit-identical
results.
"""

import numpy as np

ctypedef long long i64
ctypedef int i32

cdef i64 PS = 10**12

cdef enum:
    ST_STREAM = 0
    ST_LAT = 1
    ST_WAIT = 2
    ST_BAR = 3
    ST_DONE = 4

cdef enum:
    PG_ABSENT = 0
    PG_RESIDENT = 1
    PG_INFLIGHT = 2

cdef enum:
    K_XFER = 0
    K_THREAD = 1

cdef enum:
    CL_DEMAND = 0
    CL_PF = 1
    CL_WB = 2

cdef i64 NEW_RATE = -1


cdef inline i64 ceil_div(i64 a, i64 b) nogil:
    return (a + b - 1) // b


def _grown(i64[::1] arr, i64 cap, i64 fill):
    out = np.full(cap, fill, dtype=np.int64)
    out[: arr.shape[0]] = np.asarray(arr)
    return out


def _grown32(i32[::1] arr, i64 cap, i32 fill):
    out = np.full(cap, fill, dtype=np.int32)
    out[: arr.shape[0]] = np.asarray(arr)
    return out


def _grown8(char[::1] arr, i64 cap):
    out = np.zeros(cap, dtype=np.int8)
    out[: arr.shape[0]] = np.asarray(arr)
    return out


cdef class SimKernel:
    # configuration
    cdef i64 page_size, capacity, fast_rate_socket, cross_rate
    cdef i64 slow_read_rate, slow_write_rate, latency_ps
    cdef int single_tier, n_sockets, policy_kind, policy_k, pf_cap
    cdef int T, n_regions

    # program (borrowed numpy buffers)
    cdef i64[::1] tb, bc, brs, r_first, r_len, r_stride, r_count, r_kind
    cdef i64[::1] rgn_first, rgn_last

    # thread state
    cdef i64[::1] cur_block, cur_run, cur_seg, cur_pos, compute_end
    cdef i64[::1] s_work, s_rate, s_tlast, s_bytes, end_ps
    cdef i32[::1] state, gen_arr, socket, th_next

    # page state
    cdef char[::1] page_state, page_dirty, page_ref, page_pf
    cdef i64[::1] page_slot
    cdef i32[::1] page_xfer

    # cache
    cdef i64[::1] frames
    cdef i64 n_frames, hand

    # transfers: slot pool + per-class intrusive lists (seq order)
    cdef i64[::1] x_page, x_work, x_rate, x_tlast, x_seq
    cdef i32[::1] x_gen, x_next, x_prev, x_whead
    cdef char[::1] x_is_pf, x_promoted, x_useful, x_klass, x_live
    cdef i32 x_cap, x_free_top
    cdef i32[::1] x_free, pending
    cdef i32 n_pending
    cdef i32[3] cls_head, cls_tail
    cdef i64[3] cls_n, cur_share
    cdef i64 xfer_seq
    cdef dict seq_slot

    # memberships
    cdef i64 n_stream0, n_stream1, n_cross
    cdef int done

    # stride-policy state per (thread, region)
    cdef i64[::1] pf_prev, pf_d1, pf_d2
    cdef i32[::1] pf_nd

    # heap
    cdef i64[::1] h_time, h_seq
    cdef i32[::1] h_kind, h_idx, h_gen
    cdef i64 h_n, h_cap

    # counters
    cdef i64 demand_faults, prefetch_issued, prefetch_completed
    cdef i64 prefetch_useful, writebacks
    cdef i64 bytes_fast_read, bytes_fast_write, bytes_slow_read, bytes_slow_write

    # sample bins
    cdef i64[::1] bins_fast, bins_slow
    cdef i64 bin_width, n_bins

    def __init__(self, prog, cfg):
        cdef int i
        self.page_size = cfg["page_size"]
        self.capacity = cfg["capacity_pages"]
        self.single_tier = 1 if cfg["single_tier"] else 0
        self.n_sockets = cfg["n_sockets"]
        self.fast_rate_socket = cfg["fast_rate"] // self.n_sockets
        self.cross_rate = cfg["cross_rate"]
        self.slow_read_rate = cfg["slow_read_rate"]
        self.slow_write_rate = cfg["slow_write_rate"]
        self.latency_ps = cfg["latency_ps"]
        self.policy_kind = cfg["policy_kind"]
        self.policy_k = cfg["policy_k"]  # engine validates k <= 64
        self.pf_cap = cfg["pf_cap"]

        self.T = prog["n_threads"]
        self.tb = np.ascontiguousarray(prog["thread_block_start"], dtype=np.int64)
        self.bc = np.ascontiguousarray(prog["block_compute_ps"], dtype=np.int64)
        self.brs = np.ascontiguousarray(prog["block_run_start"], dtype=np.int64)
        self.r_first = np.ascontiguousarray(prog["run_first_byte"], dtype=np.int64)
        self.r_len = np.ascontiguousarray(prog["run_length"], dtype=np.int64)
        self.r_stride = np.ascontiguousarray(prog["run_stride"], dtype=np.int64)
        self.r_count = np.ascontiguousarray(prog["run_count"], dtype=np.int64)
        self.r_kind = np.ascontiguousarray(prog["run_kind"], dtype=np.int64)
        self.rgn_first = np.ascontiguousarray(prog["region_first_page"], dtype=np.int64)
        self.rgn_last = np.ascontiguousarray(prog["region_last_page"], dtype=np.int64)
        self.n_regions = self.rgn_first.shape[0]

        cdef int T = self.T
        self.cur_block = np.zeros(T, dtype=np.int64)
        self.cur_run = np.zeros(T, dtype=np.int64)
        self.cur_seg = np.zeros(T, dtype=np.int64)
        self.cur_pos = np.zeros(T, dtype=np.int64)
        self.compute_end = np.zeros(T, dtype=np.int64)
        self.s_work = np.zeros(T, dtype=np.int64)
        self.s_rate = np.zeros(T, dtype=np.int64)
        self.s_tlast = np.zeros(T, dtype=np.int64)
        self.s_bytes = np.zeros(T, dtype=np.int64)
        self.end_ps = np.zeros(T, dtype=np.int64)
        self.state = np.full(T, ST_DONE, dtype=np.int32)
        self.gen_arr = np.zeros(T, dtype=np.int32)
        self.th_next = np.full(T, -1, dtype=np.int32)
        self.socket = np.array([t % self.n_sockets for t in range(T)], dtype=np.int32)

        cdef i64 npages = prog["total_pages"]
        self.page_state = np.zeros(npages, dtype=np.int8)
        self.page_dirty = np.zeros(npages, dtype=np.int8)
        self.page_ref = np.zeros(npages, dtype=np.int8)
        self.page_pf = np.zeros(npages, dtype=np.int8)
        self.page_slot = np.full(npages, -1, dtype=np.int64)
        self.page_xfer = np.full(npages, -1, dtype=np.int32)

        self.frames = np.zeros(self.capacity, dtype=np.int64)
        self.n_frames = 0
        self.hand = 0

        self._init_xfers(64)
        self.seq_slot = {}
        self.xfer_seq = 0
        for i in range(3):
            self.cls_head[i] = -1
            self.cls_tail[i] = -1
            self.cls_n[i] = 0
            self.cur_share[i] = 0

        self.n_stream0 = self.n_stream1 = self.n_cross = 0
        self.done = 0

        self.pf_prev = np.full(T * self.n_regions, -1, dtype=np.int64)
        self.pf_d1 = np.zeros(T * self.n_regions, dtype=np.int64)
        self.pf_d2 = np.zeros(T * self.n_regions, dtype=np.int64)
        self.pf_nd = np.zeros(T * self.n_regions, dtype=np.int32)

        self.h_cap = 1024
        self.h_n = 0
        self.h_time = np.zeros(self.h_cap, dtype=np.int64)
        self.h_seq = np.zeros(self.h_cap, dtype=np.int64)
        self.h_kind = np.zeros(self.h_cap, dtype=np.int32)
        self.h_idx = np.zeros(self.h_cap, dtype=np.int32)
        self.h_gen = np.zeros(self.h_cap, dtype=np.int32)

        self.demand_faults = self.prefetch_issued = 0
        self.prefetch_completed = self.prefetch_useful = self.writebacks = 0
        self.bytes_fast_read = self.bytes_fast_write = 0
        self.bytes_slow_read = self.bytes_slow_write = 0

        self.n_bins = 512
        self.bin_width = cfg.get("bin_width_ps", 1 << 20)
        self.bins_fast = np.zeros(self.n_bins, dtype=np.int64)
        self.bins_slow = np.zeros(self.n_bins, dtype=np.int64)

        if not self.single_tier:
            for p in cfg["warm_pages"]:
                self._cache_install_free(p, 0)

    def _init_xfers(self, int cap):
        self.x_cap = cap
        self.x_page = np.zeros(cap, dtype=np.int64)
        self.x_work = np.zeros(cap, dtype=np.int64)
        self.x_rate = np.zeros(cap, dtype=np.int64)
        self.x_tlast = np.zeros(cap, dtype=np.int64)
        self.x_seq = np.zeros(cap, dtype=np.int64)
        self.x_gen = np.zeros(cap, dtype=np.int32)
        self.x_next = np.full(cap, -1, dtype=np.int32)
        self.x_prev = np.full(cap, -1, dtype=np.int32)
        self.x_whead = np.full(cap, -1, dtype=np.int32)
        self.x_is_pf = np.zeros(cap, dtype=np.int8)
        self.x_promoted = np.zeros(cap, dtype=np.int8)
        self.x_useful = np.zeros(cap, dtype=np.int8)
        self.x_klass = np.zeros(cap, dtype=np.int8)
        self.x_live = np.zeros(cap, dtype=np.int8)
        self.x_free = np.arange(cap - 1, -1, -1, dtype=np.int32)
        self.x_free_top = cap
        self.pending = np.zeros(cap, dtype=np.int32)
        self.n_pending = 0

    cdef i32 _grow_xfers(self) except -1:
        cdef int old = self.x_cap
        cdef int cap = old * 2
        self.x_page = _grown(self.x_page, cap, 0)
        self.x_work = _grown(self.x_work, cap, 0)
        self.x_rate = _grown(self.x_rate, cap, 0)
        self.x_tlast = _grown(self.x_tlast, cap, 0)
        self.x_seq = _grown(self.x_seq, cap, 0)
        self.x_gen = _grown32(self.x_gen, cap, 0)
        self.x_next = _grown32(self.x_next, cap, -1)
        self.x_prev = _grown32(self.x_prev, cap, -1)
        self.x_whead = _grown32(self.x_whead, cap, -1)
        self.x_is_pf = _grown8(self.x_is_pf, cap)
        self.x_promoted = _grown8(self.x_promoted, cap)
        self.x_useful = _grown8(self.x_useful, cap)
        self.x_klass = _grown8(self.x_klass, cap)
        self.x_live = _grown8(self.x_live, cap)
        free_stack = np.zeros(cap, dtype=np.int32)
        free_stack[: cap - old] = np.arange(cap - 1, old - 1, -1, dtype=np.int32)
        self.x_free = free_stack
        self.x_free_top = cap - old
        self.pending = _grown32(self.pending, cap, 0)
        self.x_cap = cap
        return 0

    # -- heap --

    cdef int _h_grow(self) except -1:
        cdef i64 cap = self.h_cap * 2
        self.h_time = _grown(self.h_time, cap, 0)
        self.h_seq = _grown(self.h_seq, cap, 0)
        self.h_kind = _grown32(self.h_kind, cap, 0)
        self.h_idx = _grown32(self.h_idx, cap, 0)
        self.h_gen = _grown32(self.h_gen, cap, 0)
        self.h_cap = cap
        return 0

    cdef inline int _h_less(self, i64 i, i64 j) nogil:
        if self.h_time[i] != self.h_time[j]:
            return self.h_time[i] < self.h_time[j]
        if self.h_kind[i] != self.h_kind[j]:
            return self.h_kind[i] < self.h_kind[j]
        return self.h_seq[i] < self.h_seq[j]

    cdef inline void _h_swap(self, i64 i, i64 j) nogil:
        cdef i64 t64
        cdef i32 t32
        t64 = self.h_time[i]; self.h_time[i] = self.h_time[j]; self.h_time[j] = t64
        t64 = self.h_seq[i]; self.h_seq[i] = self.h_seq[j]; self.h_seq[j] = t64
        t32 = self.h_kind[i]; self.h_kind[i] = self.h_kind[j]; self.h_kind[j] = t32
        t32 = self.h_idx[i]; self.h_idx[i] = self.h_idx[j]; self.h_idx[j] = t32
        t32 = self.h_gen[i]; self.h_gen[i] = self.h_gen[j]; self.h_gen[j] = t32

    cdef int _h_push(self, i64 time, i32 kind, i64 seq, i32 idx, i32 gen) except -1:
        if self.h_n == self.h_cap:
            self._h_grow()
        cdef i64 i = self.h_n
        self.h_time[i] = time
        self.h_kind[i] = kind
        self.h_seq[i] = seq
        self.h_idx[i] = idx
        self.h_gen[i] = gen
        self.h_n += 1
        cdef i64 parent
        while i > 0:
            parent = (i - 1) >> 1
            if self._h_less(i, parent):
                self._h_swap(i, parent)
                i = parent
            else:
                break
        return 0

    cdef void _h_pop(self) nogil:
        # caller reads slot 0 first
        cdef i64 i = 0, l, r, smallest
        self.h_n -= 1
        if self.h_n == 0:
            return
        self._h_swap(0, self.h_n)
        while True:
            l = 2 * i + 1
            r = l + 1
            smallest = i
            if l < self.h_n and self._h_less(l, smallest):
                smallest = l
            if r < self.h_n and self._h_less(r, smallest):
                smallest = r
            if smallest == i:
                return
            self._h_swap(i, smallest)
            i = smallest

    # -- cache (CLOCK second-chance; mirrors tiers.CacheState) --

    cdef void _cache_install_free(self, i64 page, char dirty):
        self.frames[self.n_frames] = page
        self.page_slot[page] = self.n_frames
        self.page_dirty[page] = dirty
        self.page_ref[page] = 1
        self.page_state[page] = PG_RESIDENT
        self.n_frames += 1

    cdef i64 _cache_evict_slot(self, i64 slot, char* was_dirty):
        cdef i64 victim = self.frames[slot]
        was_dirty[0] = self.page_dirty[victim]
        self.page_dirty[victim] = 0
        self.page_ref[victim] = 0
        self.page_slot[victim] = -1
        self.page_state[victim] = PG_ABSENT
        self.page_pf[victim] = 0
        return victim

    cdef void _cache_install_slot(self, i64 slot, i64 page):
        self.frames[slot] = page
        self.page_slot[page] = slot
        self.page_dirty[page] = 0
        self.page_ref[page] = 1
        self.page_state[page] = PG_RESIDENT

    cdef int _admit_demand(self, i64 page, i64* victim, char* vdirty):
        """Returns 1 when an eviction happened, 0 for a free-frame fill."""
        cdef i64 cand, slot
        if self.n_frames < self.capacity:
            self._cache_install_free(page, 0)
            return 0
        while True:
            cand = self.frames[self.hand]
            if self.page_ref[cand]:
                self.page_ref[cand] = 0
                self.hand = (self.hand + 1) % self.capacity
            else:
                slot = self.hand
                victim[0] = self._cache_evict_slot(slot, vdirty)
                self._cache_install_slot(slot, page)
                self.hand = (self.hand + 1) % self.capacity
                return 1

    cdef int _admit_cold(self, i64 page, i64* victim, char* vdirty):
        """1 = evicted, 0 = free fill, -1 = dropped (no cold frame)."""
        cdef i64 step, slot
        if self.n_frames < self.capacity:
            self._cache_install_free(page, 0)
            return 0
        for step in range(self.capacity):
            slot = (self.hand + step) % self.capacity
            if not self.page_ref[self.frames[slot]]:
                victim[0] = self._cache_evict_slot(slot, vdirty)
                self._cache_install_slot(slot, page)
                return 1
        return -1

    # -- rate allocation --

    cdef int _update_fast(self, i64 now) except -1:
        cdef i64 cross_share2 = 0
        cdef i64 n, rate
        cdef int t
        if self.cross_rate and self.n_cross:
            cross_share2 = 2 * (self.cross_rate // self.n_cross)
        for t in range(self.T):
            if self.state[t] != ST_STREAM:
                continue
            if self.socket[t] == 0:
                n = self.n_stream0
            else:
                n = self.n_stream1
            rate = self.fast_rate_socket // n
            if cross_share2 and cross_share2 < rate:
                rate = cross_share2
            if rate != self.s_rate[t]:
                self.s_work[t] -= self.s_rate[t] * (now - self.s_tlast[t])
                self.s_tlast[t] = now
                self.s_rate[t] = rate
                self.gen_arr[t] += 1
                self._h_push(now + ceil_div(self.s_work[t], rate),
                             K_THREAD, t, t, self.gen_arr[t])
        return 0

    cdef int _update_slow(self, i64 now) except -1:
        cdef i64 d_share, leftover, p_share, w_share, share
        cdef i64 shares[3]
        cdef i32 s
        cdef int klass, i
        if self.cls_n[CL_DEMAND]:
            d_share = self.slow_read_rate // self.cls_n[CL_DEMAND]
            leftover = self.slow_read_rate - self.cls_n[CL_DEMAND] * d_share
        else:
            d_share = 0
            leftover = self.slow_read_rate
        p_share = leftover // self.cls_n[CL_PF] if self.cls_n[CL_PF] else 0
        w_share = self.slow_write_rate // self.cls_n[CL_WB] if self.cls_n[CL_WB] else 0
        shares[CL_DEMAND] = d_share
        shares[CL_PF] = p_share
        shares[CL_WB] = w_share
        for klass in range(3):
            share = shares[klass]
            if share != self.cur_share[klass]:
                s = self.cls_head[klass]
                while s != -1:
                    if self.x_rate[s] != NEW_RATE:
                        self.x_work[s] -= self.x_rate[s] * (now - self.x_tlast[s])
                        self.x_tlast[s] = now
                        self.x_rate[s] = share
                        self.x_gen[s] += 1
                        if share > 0:
                            self._h_push(now + ceil_div(self.x_work[s], share),
                                         K_XFER, self.x_seq[s], s, self.x_gen[s])
                    s = self.x_next[s]
                self.cur_share[klass] = share
        if self.n_pending:
            for i in range(self.n_pending):
                s = self.pending[i]
                share = shares[self.x_klass[s]]
                self.x_rate[s] = share
                self.x_tlast[s] = now
                self.x_gen[s] += 1
                if share > 0:
                    self._h_push(now + ceil_div(self.x_work[s], share),
                                 K_XFER, self.x_seq[s], s, self.x_gen[s])
            self.n_pending = 0
        return 0

    # -- transfers --

    cdef void _cls_link(self, i32 s, int klass):
        self.x_klass[s] = klass
        self.x_next[s] = -1
        self.x_prev[s] = self.cls_tail[klass]
        if self.cls_tail[klass] != -1:
            self.x_next[self.cls_tail[klass]] = s
        else:
            self.cls_head[klass] = s
        self.cls_tail[klass] = s
        self.cls_n[klass] += 1

    cdef void _cls_unlink(self, i32 s):
        cdef int klass = self.x_klass[s]
        cdef i32 p = self.x_prev[s], n = self.x_next[s]
        if p != -1:
            self.x_next[p] = n
        else:
            self.cls_head[klass] = n
        if n != -1:
            self.x_prev[n] = p
        else:
            self.cls_tail[klass] = p
        self.cls_n[klass] -= 1

    cdef i32 _alloc_xfer(self, i64 page, char is_pf, int klass, i64 now) except -1:
        if self.x_free_top == 0:
            self._grow_xfers()
        cdef i32 s = self.x_free[self.x_free_top - 1]
        self.x_free_top -= 1
        self.xfer_seq += 1
        self.x_page[s] = page
        self.x_work[s] = self.page_size * PS
        self.x_rate[s] = NEW_RATE
        self.x_tlast[s] = now
        self.x_seq[s] = self.xfer_seq
        self.x_gen[s] += 1
        self.x_is_pf[s] = is_pf
        self.x_promoted[s] = 0
        self.x_useful[s] = 0
        self.x_live[s] = 1
        self.x_whead[s] = -1
        self._cls_link(s, klass)
        self.pending[self.n_pending] = s
        self.n_pending += 1
        self.seq_slot[self.xfer_seq] = s
        return s

    cdef int _free_xfer(self, i32 s) except -1:
        self._cls_unlink(s)
        self.x_live[s] = 0
        self.x_gen[s] += 1
        del self.seq_slot[self.x_seq[s]]
        self.x_free[self.x_free_top] = s
        self.x_free_top += 1
        return 0

    cdef i32 _start_fetch(self, i64 page, char is_pf, i64 now) except -1:
        cdef i32 s = self._alloc_xfer(page, is_pf, CL_PF if is_pf else CL_DEMAND, now)
        self.page_state[page] = PG_INFLIGHT
        self.page_xfer[page] = s
        if is_pf:
            self.prefetch_issued += 1
        else:
            self.demand_faults += 1
        return s

    cdef int _promote(self, i32 s, i64 now) except -1:
        """Move an in-flight prefetch to demand priority."""
        self.x_promoted[s] = 1
        self._cls_unlink(s)
        self._cls_link(s, CL_DEMAND)
        if self.x_rate[s] != NEW_RATE:
            self.x_work[s] -= self.x_rate[s] * (now - self.x_tlast[s])
            self.x_tlast[s] = now
            self.x_rate[s] = NEW_RATE
            self.x_gen[s] += 1
            self.pending[self.n_pending] = s
            self.n_pending += 1
        return 0

    cdef void _xfer_add_waiter(self, i32 s, int t):
        cdef i32 w = self.x_whead[s], last = -1
        self.th_next[t] = -1
        if w == -1:
            self.x_whead[s] = t
            return
        while w != -1:
            last = w
            w = self.th_next[w]
        self.th_next[last] = t

    # -- prefetch policy (twin of prefetch.py built-ins) --

    cdef int _region_of(self, i64 page) nogil:
        cdef int lo = 0, hi = self.n_regions, mid
        while lo < hi:
            mid = (lo + hi) // 2
            if self.rgn_first[mid] <= page:
                lo = mid + 1
            else:
                hi = mid
        return lo - 1

    cdef int _policy_on_miss(self, int thread, i64 page, i64 now) except -1:
        cdef int kind = self.policy_kind
        if kind == 0:
            return 0
        cdef int rgn = self._region_of(page)
        cdef int k = self.policy_k
        cdef i64 idx, prev, d1, d2, q, hi, first, last
        cdef int n_req = 0, i
        cdef i64 reqs[64]
        if kind == 2:
            idx = thread * self.n_regions + rgn
            prev = self.pf_prev[idx]
            if prev != -1:
                self.pf_d1[idx] = self.pf_d2[idx]
                self.pf_d2[idx] = page - prev
                if self.pf_nd[idx] < 2:
                    self.pf_nd[idx] += 1
            self.pf_prev[idx] = page
            d1 = self.pf_d1[idx]
            d2 = self.pf_d2[idx]
            if self.pf_nd[idx] >= 2 and d1 == d2 and d1 != 0:
                first = self.rgn_first[rgn]
                last = self.rgn_last[rgn]
                for i in range(1, 2 * k + 1):
                    q = page + d1 * i
                    if q < first or q > last:
                        break
                    if self.page_state[q] != PG_RESIDENT:
                        reqs[n_req] = q
                        n_req += 1
                        if n_req == k:
                            break
                return self._issue(reqs, n_req, now)
        hi = page + 2 * k
        if hi > self.rgn_last[rgn]:
            hi = self.rgn_last[rgn]
        q = page + 1
        while q <= hi:
            if self.page_state[q] != PG_RESIDENT:
                reqs[n_req] = q
                n_req += 1
                if n_req == k:
                    break
            q += 1
        return self._issue(reqs, n_req, now)

    cdef int _issue(self, i64* reqs, int n, i64 now) except -1:
        cdef int i, started = 0
        for i in range(n):
            if (self.page_state[reqs[i]] == PG_ABSENT
                    and self.cls_n[CL_PF] < self.pf_cap):
                self._start_fetch(reqs[i], 1, now)
                started = 1
        return started

    # -- thread stepping --

    cdef int _leave_stream(self, int t, i64 now) except -1:
        self.state[t] = ST_WAIT
        if self.socket[t] == 0:
            self.n_stream0 -= 1
        else:
            self.n_stream1 -= 1
        self.n_cross -= 1
        self._update_fast(now)
        return 0

    cdef int _advance(self, int t, i64 now, int streaming) except -1:
        cdef i64 tb_end = self.tb[t + 1]
        cdef i64 b, r, ce, length, pos, addr, page, nbytes, seg
        cdef char write, st
        cdef i32 xs
        cdef int started, promote
        while True:
            b = self.cur_block[t]
            r = self.cur_run[t]
            if r == self.brs[b + 1]:
                ce = self.compute_end[t]
                if ce > now:
                    if streaming:
                        self._leave_stream(t, now)
                    self.state[t] = ST_BAR
                    self.gen_arr[t] += 1
                    self._h_push(ce, K_THREAD, t, t, self.gen_arr[t])
                    return 0
                b += 1
                if b == tb_end:
                    if streaming:
                        self._leave_stream(t, now)
                    self.state[t] = ST_DONE
                    self.end_ps[t] = now
                    self.done += 1
                    return 0
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
            nbytes = length - pos
            if nbytes > (page + 1) * self.page_size - addr:
                nbytes = (page + 1) * self.page_size - addr
            write = 1 if self.r_kind[r] == 1 else 0
            if self.single_tier:
                st = PG_RESIDENT
            else:
                st = self.page_state[page]
            if st == PG_RESIDENT:
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
                    if self.page_pf[page]:
                        self.page_pf[page] = 0
                        self.prefetch_useful += 1
                    self.page_ref[page] = 1
                    if write:
                        self.page_dirty[page] = 1
                if write:
                    self.bytes_fast_write += nbytes
                else:
                    self.bytes_fast_read += nbytes
                self.s_work[t] = nbytes * PS
                self.s_tlast[t] = now
                self.s_bytes[t] = nbytes
                if streaming:
                    # same membership, same rate: just schedule the touch
                    self.gen_arr[t] += 1
                    self._h_push(now + ceil_div(self.s_work[t], self.s_rate[t]),
                                 K_THREAD, t, t, self.gen_arr[t])
                else:
                    self.state[t] = ST_STREAM
                    self.s_rate[t] = 0
                    if self.socket[t] == 0:
                        self.n_stream0 += 1
                    else:
                        self.n_stream1 += 1
                    self.n_cross += 1
                    self._update_fast(now)
                return 0
            if streaming:
                self._leave_stream(t, now)
                streaming = 0
            if st == PG_INFLIGHT:
                xs = self.page_xfer[page]
                if self.x_is_pf[xs] and not self.x_useful[xs]:
                    self.x_useful[xs] = 1
                    self.prefetch_useful += 1
                promote = self.x_is_pf[xs] and not self.x_promoted[xs]
                if promote:
                    self._promote(xs, now)
                started = self._policy_on_miss(t, page, now)
                if promote or started:
                    self._update_slow(now)
                self._xfer_add_waiter(xs, t)
                self.state[t] = ST_WAIT
                return 0
            # absent: demand fault path (counted when the fetch starts)
            started = self._policy_on_miss(t, page, now)
            if self.latency_ps > 0:
                if started:
                    self._update_slow(now)
                self.state[t] = ST_LAT
                self.gen_arr[t] += 1
                self._h_push(now + self.latency_ps, K_THREAD, t, t, self.gen_arr[t])
                return 0
            xs = self._start_fetch(page, 0, now)
            self._xfer_add_waiter(xs, t)
            self.state[t] = ST_WAIT
            self._update_slow(now)
            return 0

    # -- event handlers --

    cdef int _sample(self, int slow, i64 now, i64 nbytes) except -1:
        cdef i64 idx = now // self.bin_width
        cdef i64 i, half
        while idx >= self.n_bins:
            half = self.n_bins // 2
            for i in range(half):
                self.bins_fast[i] = self.bins_fast[2 * i] + self.bins_fast[2 * i + 1]
                self.bins_slow[i] = self.bins_slow[2 * i] + self.bins_slow[2 * i + 1]
            for i in range(half, self.n_bins):
                self.bins_fast[i] = 0
                self.bins_slow[i] = 0
            self.bin_width *= 2
            idx = now // self.bin_width
        if slow:
            self.bins_slow[idx] += nbytes
        else:
            self.bins_fast[idx] += nbytes
        return 0

    cdef i64 _peek_page(self, int t) nogil:
        cdef i64 r = self.cur_run[t]
        cdef i64 addr = (self.r_first[r] + self.cur_seg[t] * self.r_stride[r]
                         + self.cur_pos[t])
        return addr // self.page_size

    cdef int _latency_expired(self, int t, i64 now) except -1:
        # the page may have arrived (or begun arriving) during the stall
        cdef i64 page = self._peek_page(t)
        cdef char st = self.page_state[page]
        cdef i32 xs
        if st == PG_RESIDENT:
            self._advance(t, now, 0)
            return 0
        if st == PG_INFLIGHT:
            xs = self.page_xfer[page]
            if self.x_is_pf[xs] and not self.x_useful[xs]:
                self.x_useful[xs] = 1
                self.prefetch_useful += 1
            if self.x_is_pf[xs] and not self.x_promoted[xs]:
                self._promote(xs, now)
                self._update_slow(now)
            self._xfer_add_waiter(xs, t)
            self.state[t] = ST_WAIT
            return 0
        xs = self._start_fetch(page, 0, now)
        self._xfer_add_waiter(xs, t)
        self.state[t] = ST_WAIT
        self._update_slow(now)
        return 0

    cdef int _release_waiters(self, i32 head, i64 now) except -1:
        cdef i32 t = head, nxt
        while t != -1:
            nxt = self.th_next[t]
            self._advance(t, now, 0)
            t = nxt
        return 0

    cdef int _fetch_done(self, i32 s, i64 now) except -1:
        cdef i64 page = self.x_page[s]
        cdef char is_pf = self.x_is_pf[s]
        cdef char promoted = self.x_promoted[s]
        cdef char useful = self.x_useful[s]
        cdef i32 whead = self.x_whead[s]
        cdef i64 victim = 0
        cdef char vdirty = 0
        cdef int got
        cdef i32 wb
        self._free_xfer(s)
        self.page_xfer[page] = -1
        self.bytes_slow_read += self.page_size
        self._sample(1, now, self.page_size)
        if is_pf:
            self.prefetch_completed += 1
        if (not is_pf) or promoted:
            got = self._admit_demand(page, &victim, &vdirty)
        else:
            got = self._admit_cold(page, &victim, &vdirty)
            if got == -1:  # no cold frame: drop the fill
                self.page_state[page] = PG_ABSENT
                self._update_slow(now)
                return 0
        if is_pf and not useful:
            self.page_pf[page] = 1
        if got == 1 and vdirty:
            wb = self._alloc_xfer(victim, 0, CL_WB, now)
            self.x_whead[wb] = whead
            self._update_slow(now)
        else:
            self._update_slow(now)
            self._release_waiters(whead, now)
        return 0

    cdef int _wb_done(self, i32 s, i64 now) except -1:
        cdef i32 whead = self.x_whead[s]
        self._free_xfer(s)
        self.writebacks += 1
        self.bytes_slow_write += self.page_size
        self._sample(1, now, self.page_size)
        self._update_slow(now)
        self._release_waiters(whead, now)
        return 0

    # -- main loop --

    def run(self):
        cdef int t, st
        cdef i64 now, seq, b
        cdef i32 kind, idx, egen
        cdef i64 nbytes
        for t in range(self.T):
            if self.tb[t] == self.tb[t + 1]:
                self.state[t] = ST_DONE
                self.done += 1
            else:
                b = self.tb[t]
                self.cur_block[t] = b
                self.compute_end[t] = self.bc[b]
                self.cur_run[t] = self.brs[b]
                self.state[t] = ST_WAIT  # marker: advanced below
        for t in range(self.T):
            if self.state[t] == ST_WAIT:
                self._advance(t, 0, 0)

        while self.done < self.T:
            if self.h_n == 0:
                raise RuntimeError("event queue exhausted with threads pending")
            now = self.h_time[0]
            kind = self.h_kind[0]
            seq = self.h_seq[0]
            idx = self.h_idx[0]
            egen = self.h_gen[0]
            self._h_pop()
            if kind == K_XFER:
                if (not self.x_live[idx] or self.x_seq[idx] != seq
                        or self.x_gen[idx] != egen):
                    continue
                self.x_work[idx] = 0
                if self.x_klass[idx] == CL_WB:
                    self._wb_done(idx, now)
                else:
                    self._fetch_done(idx, now)
            else:
                t = idx
                if self.gen_arr[t] != egen:
                    continue
                st = self.state[t]
                if st == ST_STREAM:
                    self._sample(0, now, self.s_bytes[t])
                    self.s_work[t] = 0
                    self._advance(t, now, 1)
                elif st == ST_LAT:
                    self._latency_expired(t, now)
                elif st == ST_BAR:
                    self._advance(t, now, 0)

        per_thread = [self.end_ps[t] for t in range(self.T)]
        total = max(per_thread) if per_thread else 0
        return {
            "time_ps": total,
            "per_thread_ps": per_thread,
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
            "bins_fast": [self.bins_fast[i] for i in range(self.n_bins)],
            "bins_slow": [self.bins_slow[i] for i in range(self.n_bins)],
        }


def run_sim(prog, cfg):
    return SimKernel(prog, cfg).run()
