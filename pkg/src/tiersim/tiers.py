"""Two-tier memory system description and the fast-tier page cache.

The system model is a fast tier (DRAM-class, used as a page cache) in front
of a much larger slow tier (SSD-class).  ``CacheState`` tracks residency of
the fast tier at page granularity with CLOCK (second-chance) replacement,
which is the standard low-overhead LRU approximation used by OS page caches.
The replacement policy lives behind three small operations (``is_resident``,
``admit``, ``touch``) so an exact-LRU variant can be swapped in later.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

PAGE_SIZE_MIN = 4096
PAGE_SIZE_MAX = 2 * 1024 * 1024

# Sanity bounds on rates: low enough to keep integer bandwidth shares
# non-zero for any sane thread count, high enough for exascale what-ifs.
_RATE_MIN = 1_000_000
_RATE_MAX = 10**15


class SpecError(ValueError):
    """Invalid system or tier configuration."""


@dataclass(frozen=True)
class TierSpec:
    """One memory tier: capacity plus service rates.

    Bandwidths are bytes/second, latency is seconds charged per demand
    fault serviced by this tier.
    """

    name: str
    capacity: int
    read_bandwidth: int
    write_bandwidth: int
    access_latency: float = 0.0

    def __post_init__(self):
        if self.capacity <= 0:
            raise SpecError(f"tier {self.name}: capacity must be > 0")
        for label, bw in (("read", self.read_bandwidth), ("write", self.write_bandwidth)):
            if not (_RATE_MIN <= int(bw) <= _RATE_MAX):
                raise SpecError(
                    f"tier {self.name}: {label}_bandwidth must be in "
                    f"[{_RATE_MIN}, {_RATE_MAX}] bytes/s, got {bw}"
                )
        if self.access_latency < 0:
            raise SpecError(f"tier {self.name}: access_latency must be >= 0")


@dataclass(frozen=True)
class NumaSpec:
    """Dual-socket layout: per-direction cross-link bandwidth and the
    placement rule for data the tiered system writes into its cache."""

    cross_link_bandwidth: int
    write_placement: str = "local"  # "local" | "interleaved"
    sockets: int = 2

    def __post_init__(self):
        if self.sockets != 2:
            raise SpecError("numa: only 2-socket systems are modeled")
        if not (_RATE_MIN <= int(self.cross_link_bandwidth) <= _RATE_MAX):
            raise SpecError("numa: cross_link_bandwidth out of range")
        if self.write_placement not in ("local", "interleaved"):
            raise SpecError(
                f"numa: write_placement must be 'local' or 'interleaved', "
                f"got {self.write_placement!r}"
            )


@dataclass(frozen=True)
class SystemSpec:
    """Whole-node description.

    ``threads`` is the number of hardware cores; simulated workload threads
    beyond that run at proportionally reduced compute rate.  Peak compute is
    ``threads * per_core_compute`` regardless of workload concurrency.

    The fast tier is modeled as one shared duplex bus: reads and writes
    together are limited by ``fast.read_bandwidth`` (DRAM-style).  The slow
    tier has independent read and write capacity (SSD-array-style).
    """

    fast: TierSpec
    slow: TierSpec
    page_size: int = 4096
    threads: int = 44
    per_core_compute: int = 35_200_000_000  # FLOP/s, double precision
    numa: Optional[NumaSpec] = None
    # Fraction of the fast tier held back from caching (hypervisor overhead).
    reserved_fraction: float = 0.0

    def __post_init__(self):
        p = self.page_size
        if p < PAGE_SIZE_MIN or p > PAGE_SIZE_MAX or (p & (p - 1)) != 0:
            raise SpecError(
                f"page_size must be a power of two in [{PAGE_SIZE_MIN}, "
                f"{PAGE_SIZE_MAX}], got {p}"
            )
        if self.fast.capacity >= self.slow.capacity:
            raise SpecError("fast tier must be smaller than the slow tier")
        if self.threads < 1 or self.threads > 10_000:
            raise SpecError("threads must be in [1, 10000]")
        if self.per_core_compute <= 0:
            raise SpecError("per_core_compute must be > 0")
        if not 0.0 <= self.reserved_fraction < 1.0:
            raise SpecError("reserved_fraction must be in [0, 1)")
        if self.capacity_pages < 1:
            raise SpecError("fast tier holds less than one page after reservation")

    @property
    def capacity_pages(self) -> int:
        usable = int(self.fast.capacity * (1.0 - self.reserved_fraction))
        return usable // self.page_size

    @property
    def peak_flops(self) -> int:
        return self.threads * self.per_core_compute


def default_system(**overrides) -> SystemSpec:
    """The reference configuration: 256 GB fast tier at 80 GB/s over a
    1280 GB slow tier at 10 GB/s read / 8 GB/s write, 44 cores at
    35.2 GFLOP/s each.  The slow-tier write bandwidth and the 10 us fault
    latency are model defaults, not measured values."""
    spec = dict(
        fast=TierSpec("fast", 256 * 10**9, 80 * 10**9, 80 * 10**9, 0.0),
        slow=TierSpec("slow", 1280 * 10**9, 10 * 10**9, 8 * 10**9, 10e-6),
        page_size=4096,
        threads=44,
        per_core_compute=35_200_000_000,
        numa=None,
    )
    spec.update(overrides)
    return SystemSpec(**spec)


_FREE = -1


class CacheState:
    """Resident-page set of the fast tier with CLOCK replacement.

    Frames hold pages in admission order; the hand sweeps frames giving a
    second chance (clear referenced bit, advance) and evicts the first
    non-referenced page.  Demand admissions use that destructive sweep.
    Prefetch admissions use :meth:`admit_cold`, which only takes a frame
    whose referenced bit is already clear and perturbs neither the hand nor
    any referenced bit, so speculative fills cannot steal a demand page's
    second chance.
    """

    __slots__ = ("capacity_pages", "_frames", "_hand", "_dirty", "_ref", "_slot")

    def __init__(self, capacity_pages: int):
        if capacity_pages < 1:
            raise SpecError("cache needs at least one page frame")
        self.capacity_pages = capacity_pages
        self._frames: list[int] = []
        self._hand = 0
        self._dirty: dict[int, bool] = {}
        self._ref: dict[int, bool] = {}
        self._slot: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._frames)

    @property
    def clock_hand(self) -> Optional[int]:
        return self._hand if self._frames else None

    def is_resident(self, page: int) -> bool:
        return page in self._slot

    def is_dirty(self, page: int) -> bool:
        return self._dirty[page]

    def is_referenced(self, page: int) -> bool:
        return self._ref[page]

    def resident_pages(self):
        """Pages in frame order (admission order, slots reused in place)."""
        return tuple(self._frames)

    def touch(self, page: int, write: bool = False) -> None:
        if page not in self._slot:
            raise ValueError(f"touch of non-resident page {page}")
        self._ref[page] = True
        if write:
            self._dirty[page] = True

    def _install(self, slot: int, page: int, dirty: bool) -> None:
        self._frames[slot] = page
        self._slot[page] = slot
        self._dirty[page] = dirty
        self._ref[page] = True

    def _evict_slot(self, slot: int) -> tuple[int, bool]:
        victim = self._frames[slot]
        was_dirty = self._dirty.pop(victim)
        del self._ref[victim]
        del self._slot[victim]
        return victim, was_dirty

    def admit(self, page: int, dirty: bool = False) -> Optional[tuple[int, bool]]:
        """Admit a non-resident page; returns (victim, victim_was_dirty) when
        a full cache forced a CLOCK eviction, else None."""
        if page in self._slot:
            raise ValueError(f"admit of already-resident page {page}")
        if len(self._frames) < self.capacity_pages:
            self._frames.append(page)
            slot = len(self._frames) - 1
            self._slot[page] = slot
            self._dirty[page] = dirty
            self._ref[page] = True
            return None
        # Second-chance sweep; terminates within two passes.
        while True:
            candidate = self._frames[self._hand]
            if self._ref[candidate]:
                self._ref[candidate] = False
                self._hand = (self._hand + 1) % self.capacity_pages
            else:
                slot = self._hand
                evicted = self._evict_slot(slot)
                self._install(slot, page, dirty)
                self._hand = (self._hand + 1) % self.capacity_pages
                return evicted

    def admit_cold(self, page: int, dirty: bool = False) -> Optional[tuple[int, bool]]:
        """Admission variant for speculative fills.

        Takes the first frame at-or-after the hand whose referenced bit is
        clear, without clearing any bits or moving the hand.  Returns the
        eviction like :meth:`admit`, or raises ``CacheFullError`` when every
        frame is referenced (callers drop the fill)."""
        if page in self._slot:
            raise ValueError(f"admit of already-resident page {page}")
        if len(self._frames) < self.capacity_pages:
            return self.admit(page, dirty)
        for step in range(self.capacity_pages):
            slot = (self._hand + step) % self.capacity_pages
            if not self._ref[self._frames[slot]]:
                evicted = self._evict_slot(slot)
                self._install(slot, page, dirty)
                return evicted
        raise CacheFullError(page)


class CacheFullError(Exception):
    """Every frame is referenced; a cold admission has no victim to take."""
