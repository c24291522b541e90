"""Prediction policies that turn fault history into asynchronous page fetches.

The real predictor in the hardware this models is proprietary, so three
transparent baselines bracket its behavior: ``none`` reproduces dumb-swap
worst cases, ``sequential`` covers streaming, and ``stride`` additionally
locks onto constant-stride walks (the fault pattern of column-major sweeps).

Policies work in the global page space of a trace.  They are notified of
every access event; the built-in policies react only to events whose page
was not resident (``hit=False``), and their output is a pure function of
(policy state, event, residency snapshot).  Requested pages are never
resident at issue time; the engine additionally drops requests for pages
whose transfer is already in flight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Protocol

DEFAULT_LOOKAHEAD = 8


@dataclass(frozen=True)
class AccessEvent:
    """One page touch as seen by the predictor.

    ``hit`` is residency at touch time; a touch that had to wait on an
    in-flight transfer is reported as a miss.  ``time`` is seconds.
    """

    thread: int
    region: int
    page: int
    write: bool
    hit: bool
    time: float


@dataclass(frozen=True)
class PrefetchRequest:
    page: int
    priority: int = 0


@dataclass(frozen=True)
class RegionSpan:
    """Page range [first, first + pages) a region occupies."""

    first: int
    pages: int

    @property
    def last(self) -> int:
        return self.first + self.pages - 1


class ResidencyOracle(Protocol):
    def __call__(self, page: int) -> bool: ...


class PrefetchPolicy:
    """Base: never predicts."""

    name = "none"

    def __init__(self, region_spans: dict[int, RegionSpan] | None = None):
        self.region_spans = region_spans or {}

    def on_event(
        self, event: AccessEvent, is_resident: ResidencyOracle
    ) -> list[PrefetchRequest]:
        return []


class SequentialPolicy(PrefetchPolicy):
    """On a miss at page p, request the first k non-resident pages of
    {p+1, ..., p+2k} within the same region, ascending."""

    name = "sequential"

    def __init__(self, region_spans: dict[int, RegionSpan], k: int = DEFAULT_LOOKAHEAD):
        super().__init__(region_spans)
        if k < 1:
            raise ValueError("sequential lookahead k must be >= 1")
        self.k = k

    def _window(
        self, event: AccessEvent, is_resident: ResidencyOracle
    ) -> list[PrefetchRequest]:
        span = self.region_spans[event.region]
        hi = min(event.page + 2 * self.k, span.last)
        out = []
        for q in range(event.page + 1, hi + 1):
            if not is_resident(q):
                out.append(PrefetchRequest(q, len(out)))
                if len(out) == self.k:
                    break
        return out

    def on_event(self, event, is_resident):
        if event.hit:
            return []
        return self._window(event, is_resident)


class StridePolicy(SequentialPolicy):
    """Tracks the last two deltas of the per-(thread, region) miss sequence.
    While they agree on a non-zero stride s, requests up to k non-resident
    pages from p+s, p+2s, ... (scanning at most 2k terms); otherwise falls
    back to sequential behavior."""

    name = "stride"

    def __init__(self, region_spans: dict[int, RegionSpan], k: int = DEFAULT_LOOKAHEAD):
        super().__init__(region_spans, k)
        self._last: dict[tuple[int, int], int] = {}
        self._deltas: dict[tuple[int, int], tuple[int | None, int | None]] = {}

    def on_event(self, event, is_resident):
        if event.hit:
            return []
        key = (event.thread, event.region)
        prev = self._last.get(key)
        if prev is not None:
            d_old, d_new = self._deltas.get(key, (None, None))
            self._deltas[key] = (d_new, event.page - prev)
        self._last[key] = event.page
        d1, d2 = self._deltas.get(key, (None, None))
        if d1 is not None and d1 == d2 and d1 != 0:
            span = self.region_spans[event.region]
            out = []
            for i in range(1, 2 * self.k + 1):
                q = event.page + d1 * i
                if q < span.first or q > span.last:
                    break
                if not is_resident(q):
                    out.append(PrefetchRequest(q, len(out)))
                    if len(out) == self.k:
                        break
            return out
        return self._window(event, is_resident)


POLICY_KINDS = {"none": 0, "sequential": 1, "stride": 2}


def make_policy(
    name: str, region_spans: dict[int, RegionSpan], k: int = DEFAULT_LOOKAHEAD
) -> PrefetchPolicy:
    if name == "none":
        return PrefetchPolicy(region_spans)
    if name == "sequential":
        return SequentialPolicy(region_spans, k)
    if name == "stride":
        return StridePolicy(region_spans, k)
    raise ValueError(f"unknown prefetch policy {name!r}")
