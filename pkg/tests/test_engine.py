import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abrsim.engine import EventLoop, heap_cancel, heap_new, heap_pop, heap_push, ms, us


def test_same_time_dispatches_before_later():
    loop = EventLoop()
    seen = []
    loop.schedule(5, seen.append, "later")
    loop.schedule(0, seen.append, "now")
    loop.run_until(10)
    assert seen == ["now", "later"]


def test_ties_break_by_scheduling_order():
    loop = EventLoop()
    seen = []
    for tag in "abcde":
        loop.schedule(7, seen.append, tag)
    loop.run_until(7)
    assert seen == list("abcde")


def test_cancelled_event_never_fires():
    loop = EventLoop()
    seen = []
    h = loop.schedule(3, seen.append, "x")
    loop.schedule(4, seen.append, "y")
    assert loop.cancel(h)
    assert not loop.cancel(h)
    stats = loop.run_until(10)
    assert seen == ["y"]
    assert stats["dispatched"] == 1


def test_empty_queue_advances_clock_to_end():
    loop = EventLoop()
    stats = loop.run_until(us(5))
    assert stats == {"dispatched": 0, "clock": us(5), "pending": 0}


def test_run_until_is_inclusive():
    loop = EventLoop()
    seen = []
    for k in (1, 2, 3):
        loop.schedule(us(k), seen.append, k)
    assert loop.run_until(us(2))["dispatched"] == 2
    assert seen == [1, 2]
    assert len(loop) == 1
    loop.run_until(us(3))
    assert seen == [1, 2, 3]


def test_handler_may_schedule_ahead_of_pending_events():
    loop = EventLoop()
    seen = []

    def first():
        seen.append("first")
        loop.schedule(loop.now + 1, seen.append, "inserted")

    loop.schedule(10, first)
    loop.schedule(50, seen.append, "pending")
    loop.run_until(100)
    assert seen == ["first", "inserted", "pending"]


def test_scheduling_in_the_past_fails():
    loop = EventLoop()
    loop.schedule(10, lambda: None)
    loop.run_until(10)
    with pytest.raises(ValueError):
        loop.schedule(9, lambda: None)


def test_heap_grows_past_initial_capacity():
    h = heap_new(4, 1, 1)
    for t in range(100, 0, -1):
        h, slot, seq = heap_push(h, t)
        h.ev_int[slot, 0] = t
    out = []
    while True:
        s = heap_pop(h)
        if s < 0:
            break
        out.append(int(h.ev_int[s, 0]))
    assert out == list(range(1, 101))


def test_raw_cancel_checks_sequence():
    h = heap_new(8, 1, 1)
    h, slot, seq = heap_push(h, 5)
    assert not heap_cancel(h, slot, seq + 1)
    assert heap_cancel(h, slot, seq)
    assert heap_pop(h) == -1


def test_time_helpers():
    assert ms(1) == 1_000_000_000
    assert us(2.831197) == 2_831_197


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=50), min_size=1, max_size=80),
       st.sets(st.integers(min_value=0, max_value=79)))
def test_dispatch_order_is_time_then_sequence(times, cancel_idx):
    loop = EventLoop(capacity=4)
    seen = []
    handles = [loop.schedule(t, seen.append, (t, i)) for i, t in enumerate(times)]
    for i in cancel_idx:
        if i < len(handles):
            loop.cancel(handles[i])
    loop.run_until(50)
    expected = sorted((t, i) for i, t in enumerate(times) if i not in cancel_idx)
    assert seen == expected


def test_identical_runs_identical_dispatch():
    def trace():
        loop = EventLoop()
        seen = []
        rng = np.random.default_rng(7)
        for i, t in enumerate(rng.integers(0, 1000, 200)):
            loop.schedule(int(t), seen.append, i)
        loop.run_until(1000)
        return seen

    assert trace() == trace()
