"""Prediction policy behavior against a scripted residency oracle."""

from hypothesis import given, settings
from hypothesis import strategies as st

from tiersim import AccessEvent, RegionSpan, make_policy

SPANS = {0: RegionSpan(0, 1000), 1: RegionSpan(1000, 50)}


def miss(page, thread=0, region=0, t=0.0):
    return AccessEvent(thread=thread, region=region, page=page, write=False,
                       hit=False, time=t)


def hit(page, thread=0, region=0):
    return AccessEvent(thread=thread, region=region, page=page, write=False,
                       hit=True, time=0.0)


def pages(requests):
    return [r.page for r in requests]


def test_none_policy_is_silent():
    p = make_policy("none", SPANS)
    assert p.on_event(miss(10), lambda q: False) == []
    assert p.on_event(hit(10), lambda q: True) == []


def test_sequential_basic_window():
    p = make_policy("sequential", SPANS, k=4)
    assert pages(p.on_event(miss(10), lambda q: False)) == [11, 12, 13, 14]


def test_sequential_skips_resident_within_double_window():
    p = make_policy("sequential", SPANS, k=4)
    resident = {11, 13}
    out = pages(p.on_event(miss(10), lambda q: q in resident))
    assert out == [12, 14, 15, 16]


def test_sequential_never_exceeds_k():
    p = make_policy("sequential", SPANS, k=3)
    assert len(p.on_event(miss(0), lambda q: False)) == 3


def test_sequential_clips_at_region_end():
    p = make_policy("sequential", SPANS, k=4)
    out = pages(p.on_event(miss(1048, region=1), lambda q: False))
    assert out == [1049]


def test_sequential_ignores_hits():
    p = make_policy("sequential", SPANS, k=4)
    assert p.on_event(hit(10), lambda q: False) == []


def test_stride_locks_onto_constant_delta():
    p = make_policy("stride", SPANS, k=2)
    p.on_event(miss(0), lambda q: False)
    p.on_event(miss(8), lambda q: False)
    out = pages(p.on_event(miss(16), lambda q: False))
    assert out == [24, 32]


def test_stride_falls_back_to_sequential():
    p = make_policy("stride", SPANS, k=2)
    assert pages(p.on_event(miss(0), lambda q: False)) == [1, 2]
    # deltas 8 then 5: no lock, sequential window again
    p.on_event(miss(8), lambda q: False)
    out = pages(p.on_event(miss(13), lambda q: False))
    assert out == [14, 15]


def test_stride_negative_direction():
    p = make_policy("stride", SPANS, k=2)
    p.on_event(miss(100), lambda q: False)
    p.on_event(miss(90), lambda q: False)
    out = pages(p.on_event(miss(80), lambda q: False))
    assert out == [70, 60]


def test_stride_zero_delta_not_a_lock():
    p = make_policy("stride", SPANS, k=2)
    p.on_event(miss(5), lambda q: False)
    p.on_event(miss(5), lambda q: False)
    out = pages(p.on_event(miss(5), lambda q: False))
    assert out == [6, 7]  # sequential fallback


def test_stride_state_is_per_thread_and_region():
    p = make_policy("stride", SPANS, k=2)
    for q in (0, 8):
        p.on_event(miss(q, thread=0), lambda q: False)
    # interleaved traffic from another thread must not break the lock
    p.on_event(miss(500, thread=1), lambda q: False)
    p.on_event(miss(507, thread=1), lambda q: False)
    out = pages(p.on_event(miss(16, thread=0), lambda q: False))
    assert out == [24, 32]


@settings(max_examples=150, deadline=None)
@given(
    name=st.sampled_from(["sequential", "stride"]),
    k=st.integers(1, 6),
    miss_pages=st.lists(st.integers(0, 990), min_size=1, max_size=8),
    resident=st.sets(st.integers(0, 1049), max_size=200),
)
def test_policies_never_request_resident_pages(name, k, miss_pages, resident):
    p = make_policy(name, SPANS, k=k)
    oracle = lambda q: q in resident
    for q in miss_pages:
        out = p.on_event(miss(q), oracle)
        assert len(out) <= k
        for req in out:
            assert not oracle(req.page)
            span = SPANS[0]
            assert span.first <= req.page <= span.last


def test_policy_output_depends_only_on_state_and_inputs():
    a = make_policy("stride", SPANS, k=3)
    b = make_policy("stride", SPANS, k=3)
    resident = {17, 40}
    oracle = lambda q: q in resident
    for q in (0, 8, 16, 24):
        out_a = a.on_event(miss(q), oracle)
        out_b = b.on_event(miss(q), oracle)
        assert out_a == out_b
