"""Deterministic trace generators with exact byte and FLOP accounting.

A trace is a block-granularity description of a workload's memory traffic:
regions (the arrays it owns), and per-thread ordered work blocks, each block
being a list of access runs plus the FLOPs attributed to that span of work.
Block granularity keeps traces desk-scale while preserving page-level
locality structure; arithmetic intensity is known analytically for every
generator, so sweeps can place points exactly on the intensity axis.

Generators cover the classic kernels: a tunable-intensity polynomial stream
(of which STREAM copy/scale are the degree-0/1 special cases), the four
STREAM kernels, tile-blocked matrix multiply, LU factorization in both a
column-walking naive variant and a tile-blocked variant, a three-pass 3-D
FFT, and a seeded random-touch workload.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import IntEnum

from .prefetch import RegionSpan


class AccessKind(IntEnum):
    READ = 0
    WRITE = 1


@dataclass(frozen=True)
class Region:
    id: int
    size: int
    label: str = ""

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"region {self.id}: size must be > 0")


@dataclass(frozen=True)
class AccessRun:
    """A strided span of traffic inside one region.

    ``count`` segments of ``length`` bytes, the i-th starting at
    ``offset + i*stride``.  ``count == 1`` is a plain contiguous run and
    ``stride`` is ignored.  Segments never overlap.
    """

    region: int
    offset: int
    length: int
    kind: AccessKind
    stride: int = 0
    count: int = 1

    @property
    def bytes(self) -> int:
        return self.length * self.count

    @property
    def end(self) -> int:
        if self.count == 1:
            return self.offset + self.length
        return self.offset + self.stride * (self.count - 1) + self.length

    def __post_init__(self):
        if self.offset < 0 or self.length <= 0 or self.count < 1:
            raise ValueError("run must have offset >= 0, length > 0, count >= 1")
        if self.count > 1 and self.stride < self.length:
            raise ValueError("strided run segments must not overlap")


@dataclass(frozen=True)
class WorkBlock:
    thread: int
    runs: tuple[AccessRun, ...]
    flops: int

    def __post_init__(self):
        if self.thread < 0:
            raise ValueError("thread id must be >= 0")
        if self.flops < 0:
            raise ValueError("flops must be >= 0")


@dataclass(frozen=True)
class TraceMeta:
    name: str
    parameters: dict
    total_flops: int
    total_bytes: int
    footprint_bytes: int
    arithmetic_intensity: float


@dataclass(frozen=True)
class Trace:
    regions: tuple[Region, ...]
    blocks: tuple[WorkBlock, ...]
    meta: TraceMeta

    @property
    def num_threads(self) -> int:
        return 1 + max((b.thread for b in self.blocks), default=0)

    def region_page_spans(self, page_size: int) -> dict[int, RegionSpan]:
        """Global page layout: regions in id order, each starting on a fresh
        page boundary."""
        spans = {}
        first = 0
        for r in self.regions:
            pages = -(-r.size // page_size)
            spans[r.id] = RegionSpan(first, pages)
            first += pages
        return spans

    def total_pages(self, page_size: int) -> int:
        return sum(-(-r.size // page_size) for r in self.regions)


def _make_trace(name: str, parameters: dict, regions: list[Region],
                blocks: list[WorkBlock]) -> Trace:
    """Assemble a trace, computing and cross-checking the meta totals."""
    by_id = {}
    for r in regions:
        if r.id in by_id:
            raise ValueError(f"duplicate region id {r.id}")
        by_id[r.id] = r
    total_flops = 0
    total_bytes = 0
    for b in blocks:
        total_flops += b.flops
        for run in b.runs:
            reg = by_id.get(run.region)
            if reg is None:
                raise ValueError(f"run references unknown region {run.region}")
            if run.end > reg.size:
                raise ValueError(
                    f"run exceeds region {run.region}: end {run.end} > size {reg.size}"
                )
            total_bytes += run.bytes
    footprint = sum(r.size for r in regions)
    ai = total_flops / total_bytes if total_bytes else 0.0
    meta = TraceMeta(name, dict(parameters), total_flops, total_bytes, footprint, ai)
    return Trace(tuple(regions), tuple(blocks), meta)


def _partition(total: int, parts: int) -> list[tuple[int, int]]:
    """Contiguous [start, end) split of `total` items into `parts`, first
    parts get the remainder."""
    base, rem = divmod(total, parts)
    out = []
    start = 0
    for i in range(parts):
        n = base + (1 if i < rem else 0)
        out.append((start, start + n))
        start += n
    return out


def _check_chunk(chunk: int, min_share_bytes: int) -> None:
    if chunk <= 0 or chunk % 8 != 0:
        raise ValueError("chunk must be a positive multiple of 8 bytes")
    if chunk > min_share_bytes:
        raise ValueError(
            f"chunk {chunk} exceeds the smallest per-thread share {min_share_bytes}"
        )


def gen_polynomial(elements: int, degree: int, streams: str = "one",
                   threads: int = 1, chunk: int = 65536) -> Trace:
    """Horner-evaluation stream over an array of doubles.

    One region of 8*elements bytes split contiguously across threads; each
    thread walks its share in `chunk`-byte blocks of sequential reads (plus a
    same-length write run when streams="two"), doing 2*degree FLOPs per
    element (one add and one multiply per degree).  Intensity is therefore
    2*degree/8 FLOP/byte for one stream and 2*degree/16 for two; degree zero
    degenerates to a pure copy-rate stream.
    """
    if elements < 1:
        raise ValueError("elements must be >= 1")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if streams not in ("one", "two"):
        raise ValueError("streams must be 'one' or 'two'")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if elements < threads:
        raise ValueError("need at least one element per thread")
    parts = _partition(elements, threads)
    _check_chunk(chunk, 8 * min(e - s for s, e in parts))
    region = Region(0, 8 * elements, "x")
    blocks = []
    for t, (s, e) in enumerate(parts):
        lo, hi = 8 * s, 8 * e
        off = lo
        while off < hi:
            length = min(chunk, hi - off)
            runs = [AccessRun(0, off, length, AccessKind.READ)]
            if streams == "two":
                runs.append(AccessRun(0, off, length, AccessKind.WRITE))
            blocks.append(WorkBlock(t, tuple(runs), 2 * degree * (length // 8)))
            off += length
    params = dict(family="polynomial", elements=elements, degree=degree,
                  streams=streams, threads=threads, chunk=chunk)
    return _make_trace("polynomial", params, [region], blocks)


STREAM_KERNELS = ("copy", "scale", "add", "triad")

# (number of read arrays, flops per element)
_STREAM_SHAPE = {"copy": (1, 0), "scale": (1, 1), "add": (2, 1), "triad": (2, 2)}


def gen_stream(kernel: str, elements: int, threads: int = 1,
               chunk: int = 65536) -> Trace:
    """STREAM kernels with the canonical per-element accounting:
    copy r8+w8/0 FLOP, scale r8+w8/1, add r16+w8/1, triad r16+w8/2."""
    if kernel not in _STREAM_SHAPE:
        raise ValueError(f"unknown STREAM kernel {kernel!r}")
    if elements < 1:
        raise ValueError("elements must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if elements < threads:
        raise ValueError("need at least one element per thread")
    n_reads, flops_per_elem = _STREAM_SHAPE[kernel]
    labels = ["a", "b", "c"][: n_reads + 1]
    regions = [Region(i, 8 * elements, lab) for i, lab in enumerate(labels)]
    write_region = n_reads  # the last region is the destination
    parts = _partition(elements, threads)
    _check_chunk(chunk, 8 * min(e - s for s, e in parts))
    blocks = []
    for t, (s, e) in enumerate(parts):
        lo, hi = 8 * s, 8 * e
        off = lo
        while off < hi:
            length = min(chunk, hi - off)
            runs = [AccessRun(i, off, length, AccessKind.READ) for i in range(n_reads)]
            runs.append(AccessRun(write_region, off, length, AccessKind.WRITE))
            blocks.append(WorkBlock(t, tuple(runs), flops_per_elem * (length // 8)))
            off += length
    params = dict(family="stream", kernel=kernel, elements=elements,
                  threads=threads, chunk=chunk)
    return _make_trace(f"stream-{kernel}", params, regions, blocks)


def gemm_tile_ai(tile: int, element_size: int) -> float:
    """Compute-to-traffic ratio of one tile multiply against a single
    streamed operand: 2 FLOPs per element of a tile divided by the element
    size.  This is the figure of merit for how far a tile size sits above
    the compute-bound threshold."""
    return 2.0 * tile / element_size


def gen_gemm_tiled(n: int, tile: int, element_size: int = 8,
                   threads: int = 1) -> Trace:
    """Tile-blocked matrix multiply C = A*B on an n x n problem.

    Matrices are stored tile-contiguously (arrays of tile*tile segments).
    For each output tile (i,j): read C(i,j) once, then for every k one block
    reading A(i,k) and B(k,j) with 2*tile^3 FLOPs, then write C(i,j) back.
    Output tiles are dealt round-robin to threads.
    """
    if element_size not in (4, 8):
        raise ValueError("element_size must be 4 or 8")
    if tile < 1 or tile > n:
        raise ValueError("tile must be in [1, n]")
    if n % tile != 0:
        raise ValueError("tile must divide n")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    grid = n // tile
    tile_bytes = tile * tile * element_size
    regions = [Region(i, n * n * element_size, lab) for i, lab in enumerate("ABC")]

    def tile_run(region: int, ti: int, tj: int, kind: AccessKind) -> AccessRun:
        return AccessRun(region, (ti * grid + tj) * tile_bytes, tile_bytes, kind)

    blocks = []
    for i in range(grid):
        for j in range(grid):
            t = (i * grid + j) % threads
            blocks.append(WorkBlock(t, (tile_run(2, i, j, AccessKind.READ),), 0))
            for k in range(grid):
                runs = (tile_run(0, i, k, AccessKind.READ),
                        tile_run(1, k, j, AccessKind.READ))
                blocks.append(WorkBlock(t, runs, 2 * tile ** 3))
            blocks.append(WorkBlock(t, (tile_run(2, i, j, AccessKind.WRITE),), 0))
    params = dict(family="gemm", n=n, tile=tile, element_size=element_size,
                  threads=threads, tile_ai=gemm_tile_ai(tile, element_size))
    return _make_trace("gemm-tiled", params, regions, blocks)


def gen_lu(n: int, variant: str = "naive", tile: int = 0,
           threads: int = 1) -> Trace:
    """LU factorization traffic, row-major n x n doubles.

    naive: per pivot step k, one full-row read+write pair for the pivot swap
    followed by a column-by-column read of the trailing (n-k) x (n-k)
    submatrix -- each column one strided run of 8-byte elements, the
    page-unfriendly walk of a contiguous-array factorization -- with
    2*(n-k)^2 FLOPs.

    tiled: right-looking blocked factorization on an (n/tile)^2 tile grid
    stored tile-contiguously; diagonal factor blocks carry floor(2*t^3/3)
    FLOPs, panel solves t^3, trailing updates 2*t^3, each touching at most
    three tiles contiguously.  Total FLOPs match the naive variant up to the
    diagonal-term correction.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if variant == "naive":
        if n < 1:
            raise ValueError("n must be >= 1")
        region = Region(0, 8 * n * n, "matrix")
        blocks = []
        for k in range(n):
            m = n - k
            runs = [AccessRun(0, 8 * k * n, 8 * n, AccessKind.READ),
                    AccessRun(0, 8 * k * n, 8 * n, AccessKind.WRITE)]
            for j in range(k, n):
                runs.append(AccessRun(0, 8 * (k * n + j), 8, AccessKind.READ,
                                      stride=8 * n, count=m))
            blocks.append(WorkBlock(k % threads, tuple(runs), 2 * m * m))
        params = dict(family="lu", variant="naive", n=n, threads=threads)
        return _make_trace("lu-naive", params, [region], blocks)

    if variant != "tiled":
        raise ValueError("variant must be 'naive' or 'tiled'")
    if tile < 1 or n < tile:
        raise ValueError("need n >= tile >= 1 for the tiled variant")
    if n % tile != 0:
        raise ValueError("tile must divide n")
    grid = n // tile
    tile_bytes = tile * tile * 8
    region = Region(0, 8 * n * n, "matrix")

    def tr(ti: int, tj: int, kind: AccessKind) -> AccessRun:
        return AccessRun(0, (ti * grid + tj) * tile_bytes, tile_bytes, kind)

    blocks = []
    seq = 0

    def emit(runs, flops):
        nonlocal seq
        blocks.append(WorkBlock(seq % threads, tuple(runs), flops))
        seq += 1

    for k in range(grid):
        emit((tr(k, k, AccessKind.READ), tr(k, k, AccessKind.WRITE)),
             (2 * tile ** 3) // 3)
        for i in range(k + 1, grid):  # column panel
            emit((tr(k, k, AccessKind.READ), tr(i, k, AccessKind.READ),
                  tr(i, k, AccessKind.WRITE)), tile ** 3)
        for j in range(k + 1, grid):  # row panel
            emit((tr(k, k, AccessKind.READ), tr(k, j, AccessKind.READ),
                  tr(k, j, AccessKind.WRITE)), tile ** 3)
        for i in range(k + 1, grid):  # trailing update
            for j in range(k + 1, grid):
                emit((tr(i, k, AccessKind.READ), tr(k, j, AccessKind.READ),
                      tr(i, j, AccessKind.READ), tr(i, j, AccessKind.WRITE)),
                     2 * tile ** 3)
    params = dict(family="lu", variant="tiled", n=n, tile=tile, threads=threads)
    return _make_trace("lu-tiled", params, [region], blocks)


def gen_fft3d(n: int, threads: int = 1) -> Trace:
    """Three-pass transform of an n^3 grid of complex doubles (16n^3 bytes).

    Pass 1 streams the contiguous dimension; passes 2 and 3 walk pencils at
    strides 16n and 16n^2.  Each pass reads and writes the grid in place and
    carries round(5 n^3 log2 n) FLOPs, split across threads proportionally
    to their pencil share.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    size = 16 * n ** 3
    region = Region(0, size, "grid")
    pass_flops = round(5 * n ** 3 * math.log2(n))
    blocks = []

    def flops_share(lo, hi, total_units, flops_total):
        # exact proportional split: cumulative difference keeps the sum exact
        return flops_total * hi // total_units - flops_total * lo // total_units

    # pass 1: contiguous x-lines; partition the byte range directly
    for t, (s, e) in enumerate(_partition(n * n, threads)):
        if s == e:
            continue
        lo, hi = 16 * n * s, 16 * n * e
        runs = (AccessRun(0, lo, hi - lo, AccessKind.READ),
                AccessRun(0, lo, hi - lo, AccessKind.WRITE))
        blocks.append(WorkBlock(t, runs, flops_share(s, e, n * n, pass_flops)))

    # passes 2 and 3: one strided read+write run pair per pencil
    for stride, base_of in (
        (16 * n, lambda z, x: 16 * (z * n * n + x)),        # pencils along y
        (16 * n * n, lambda y, x: 16 * (y * n + x)),        # pencils along z
    ):
        for t, (s, e) in enumerate(_partition(n * n, threads)):
            if s == e:
                continue
            runs = []
            for p in range(s, e):
                off = base_of(p // n, p % n)
                runs.append(AccessRun(0, off, 16, AccessKind.READ,
                                      stride=stride, count=n))
                runs.append(AccessRun(0, off, 16, AccessKind.WRITE,
                                      stride=stride, count=n))
            blocks.append(WorkBlock(t, tuple(runs),
                                    flops_share(s, e, n * n, pass_flops)))
    params = dict(family="fft3d", n=n, threads=threads, pass_flops=pass_flops)
    return _make_trace("fft3d", params, [region], blocks)


def gen_random(footprint: int, touches: int, touch_bytes: int, ai: float = 0.0,
               threads: int = 1, seed: int = 0) -> Trace:
    """Seeded uniform random touches: 4096-aligned offsets into one region,
    one read block per touch with round(ai * touch_bytes) FLOPs."""
    if footprint < 1 or touch_bytes < 1 or touches < 0:
        raise ValueError("footprint and touch_bytes must be >= 1, touches >= 0")
    if touch_bytes > footprint:
        raise ValueError("touch_bytes must not exceed footprint")
    if ai < 0:
        raise ValueError("ai must be >= 0")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    region = Region(0, footprint, "heap")
    rng = random.Random(seed)
    slots = (footprint - touch_bytes) // 4096 + 1
    flops = round(ai * touch_bytes)
    blocks = []
    for i in range(touches):
        off = rng.randrange(slots) * 4096
        blocks.append(WorkBlock(i % threads,
                                (AccessRun(0, off, touch_bytes, AccessKind.READ),),
                                flops))
    params = dict(family="random", footprint=footprint, touches=touches,
                  touch_bytes=touch_bytes, ai=ai, threads=threads, seed=seed)
    return _make_trace("random", params, [region], blocks)


def iter_page_touches(trace: Trace, page_size: int):
    """Expand a trace into its page-touch stream, in trace order.

    Yields (thread, page, bytes, is_write) with global page ids; segments
    are split at page boundaries.  This is the canonical expansion order all
    engines follow, and the order warm-up uses for first-touch residency.
    """
    spans = trace.region_page_spans(page_size)
    for block in trace.blocks:
        for run in block.runs:
            base = spans[run.region].first * page_size
            is_write = run.kind == AccessKind.WRITE
            for i in range(run.count):
                start = base + run.offset + i * run.stride
                remaining = run.length
                while remaining > 0:
                    page = start // page_size
                    in_page = min(remaining, (page + 1) * page_size - start)
                    yield block.thread, page, in_page, is_write
                    start += in_page
                    remaining -= in_page


def count_page_touches(trace: Trace, page_size: int, limit: int | None = None) -> int:
    """Number of page touches the trace expands to; stops early past `limit`."""
    n = 0
    for _ in iter_page_touches(trace, page_size):
        n += 1
        if limit is not None and n > limit:
            return n
    return n
