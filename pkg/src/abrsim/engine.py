"""Deterministic discrete-event core.

Simulated time is an integer number of picoseconds.  Pending events live in
a binary min-heap keyed on ``(fire_time, sequence)``; the payload of each
event sits in a slot of a fixed-width pool so the heap only moves three
integers per swap.  All heap routines are jit-compiled and are driven either
by the simulation kernel or, for general use, by :class:`EventLoop`.
"""
from collections import namedtuple

import numpy as np

from ._jit import njit

PS_PER_US = 1_000_000
PS_PER_MS = 1_000_000_000
PS_PER_S = 1_000_000_000_000

# meta slots
SIZE = 0
NEXT_SEQ = 1
FREE_TOP = 2
NOW = 3

Heap = namedtuple(
    "Heap",
    ["key_time", "key_seq", "key_slot", "ev_int", "ev_flt", "slot_seq", "cancelled", "free", "meta"],
)


def us(x):
    return int(round(x * PS_PER_US))


def ms(x):
    return int(round(x * PS_PER_MS))


def seconds(x):
    return int(round(x * PS_PER_S))


@njit
def heap_new(capacity, n_int, n_flt):
    capacity = max(capacity, 4)
    free = np.empty(capacity, dtype=np.int64)
    for i in range(capacity):
        free[i] = capacity - 1 - i
    meta = np.zeros(4, dtype=np.int64)
    meta[FREE_TOP] = capacity
    return Heap(
        np.zeros(capacity, dtype=np.int64),
        np.zeros(capacity, dtype=np.int64),
        np.zeros(capacity, dtype=np.int64),
        np.zeros((capacity, n_int), dtype=np.int64),
        np.zeros((capacity, n_flt), dtype=np.float64),
        np.full(capacity, -1, dtype=np.int64),
        np.zeros(capacity, dtype=np.uint8),
        free,
        meta,
    )


@njit
def _grow(h):
    old = h.key_time.shape[0]
    new = old * 2
    key_time = np.zeros(new, dtype=np.int64)
    key_seq = np.zeros(new, dtype=np.int64)
    key_slot = np.zeros(new, dtype=np.int64)
    ev_int = np.zeros((new, h.ev_int.shape[1]), dtype=np.int64)
    ev_flt = np.zeros((new, h.ev_flt.shape[1]), dtype=np.float64)
    slot_seq = np.full(new, -1, dtype=np.int64)
    cancelled = np.zeros(new, dtype=np.uint8)
    free = np.empty(new, dtype=np.int64)
    n = h.meta[SIZE]
    key_time[:n] = h.key_time[:n]
    key_seq[:n] = h.key_seq[:n]
    key_slot[:n] = h.key_slot[:n]
    ev_int[:old] = h.ev_int
    ev_flt[:old] = h.ev_flt
    slot_seq[:old] = h.slot_seq
    cancelled[:old] = h.cancelled
    # the pool was full, so every new slot is free
    top = 0
    for s in range(new - 1, old - 1, -1):
        free[top] = s
        top += 1
    meta = h.meta.copy()
    meta[FREE_TOP] = top
    return Heap(key_time, key_seq, key_slot, ev_int, ev_flt, slot_seq, cancelled, free, meta)


@njit
def _less(h, i, j):
    ti = h.key_time[i]
    tj = h.key_time[j]
    if ti != tj:
        return ti < tj
    return h.key_seq[i] < h.key_seq[j]


@njit
def _swap(h, i, j):
    t = h.key_time[i]
    h.key_time[i] = h.key_time[j]
    h.key_time[j] = t
    s = h.key_seq[i]
    h.key_seq[i] = h.key_seq[j]
    h.key_seq[j] = s
    k = h.key_slot[i]
    h.key_slot[i] = h.key_slot[j]
    h.key_slot[j] = k


@njit
def heap_push(h, fire_time):
    """Reserve an event at ``fire_time``.

    Returns ``(heap, slot, seq)``; the heap may be a reallocated copy.  The
    caller fills ``heap.ev_int[slot]`` / ``heap.ev_flt[slot]`` with the payload.
    ``(slot, seq)`` is the cancellation handle.
    """
    if fire_time < h.meta[NOW]:
        raise ValueError("event scheduled in the past")
    if h.meta[FREE_TOP] == 0:
        h = _grow(h)
    meta = h.meta
    meta[FREE_TOP] -= 1
    slot = h.free[meta[FREE_TOP]]
    seq = meta[NEXT_SEQ]
    meta[NEXT_SEQ] = seq + 1
    h.slot_seq[slot] = seq
    h.cancelled[slot] = 0
    i = meta[SIZE]
    meta[SIZE] = i + 1
    h.key_time[i] = fire_time
    h.key_seq[i] = seq
    h.key_slot[i] = slot
    while i > 0:
        parent = (i - 1) >> 1
        if _less(h, i, parent):
            _swap(h, i, parent)
            i = parent
        else:
            break
    return h, slot, seq


@njit
def _remove_top(h):
    meta = h.meta
    slot = h.key_slot[0]
    n = meta[SIZE] - 1
    meta[SIZE] = n
    if n > 0:
        h.key_time[0] = h.key_time[n]
        h.key_seq[0] = h.key_seq[n]
        h.key_slot[0] = h.key_slot[n]
        i = 0
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            best = left
            right = left + 1
            if right < n and _less(h, right, left):
                best = right
            if _less(h, best, i):
                _swap(h, i, best)
                i = best
            else:
                break
    h.slot_seq[slot] = -1
    h.free[meta[FREE_TOP]] = slot
    meta[FREE_TOP] += 1
    return slot


@njit
def heap_peek_time(h):
    """Fire time of the earliest live event, or -1 when none is pending."""
    while h.meta[SIZE] > 0:
        if h.cancelled[h.key_slot[0]] != 0:
            _remove_top(h)
            continue
        return h.key_time[0]
    return -1


@njit
def heap_pop(h):
    """Pop the earliest live event and advance the clock to it.

    Returns the payload slot, or -1 if the heap is empty.  The slot's payload
    stays readable until the next :func:`heap_push`.
    """
    if heap_peek_time(h) < 0:
        return -1
    h.meta[NOW] = h.key_time[0]
    return _remove_top(h)


@njit
def heap_cancel(h, slot, seq):
    if slot < 0 or slot >= h.slot_seq.shape[0]:
        return False
    if h.slot_seq[slot] != seq or h.cancelled[slot] != 0:
        return False
    h.cancelled[slot] = 1
    return True


@njit
def heap_live_slots(h, out):
    """Write the slots of all live (uncancelled) pending events into ``out``."""
    k = 0
    for i in range(h.meta[SIZE]):
        s = h.key_slot[i]
        if h.cancelled[s] == 0:
            out[k] = s
            k += 1
    return k


class EventLoop:
    """Callback-driven front end to the jit heap.

    >>> loop = EventLoop()
    >>> seen = []
    >>> _ = loop.schedule(2, seen.append, "b")
    >>> _ = loop.schedule(1, seen.append, "a")
    >>> loop.run_until(10)["dispatched"], seen
    (2, ['a', 'b'])
    """

    def __init__(self, capacity=64):
        self._heap = heap_new(capacity, 1, 1)
        self._actions = {}

    @property
    def now(self):
        return int(self._heap.meta[NOW])

    def __len__(self):
        return len(self._actions)

    def schedule(self, fire_time, action, *args):
        fire_time = int(fire_time)
        if fire_time < self.now:
            raise ValueError(f"cannot schedule at {fire_time} ps, clock is at {self.now} ps")
        self._heap, slot, seq = heap_push(self._heap, fire_time)
        self._actions[int(seq)] = (action, args)
        self._heap.ev_int[slot, 0] = seq
        return int(slot), int(seq)

    def cancel(self, handle):
        slot, seq = handle
        if heap_cancel(self._heap, slot, seq):
            del self._actions[seq]
            return True
        return False

    def run_until(self, t_end):
        t_end = int(t_end)
        dispatched = 0
        h = self._heap
        while True:
            t = heap_peek_time(h)
            if t < 0 or t > t_end:
                break
            slot = heap_pop(h)
            seq = int(h.ev_int[slot, 0])
            action, args = self._actions.pop(seq)
            action(*args)
            dispatched += 1
            h = self._heap  # handlers may have grown the heap
        if t_end > self.now:
            self._heap.meta[NOW] = t_end
        return {"dispatched": dispatched, "clock": self.now, "pending": len(self._actions)}
