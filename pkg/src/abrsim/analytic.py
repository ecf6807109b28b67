"""Closed-form worst-case queue model.

Below the overload threshold every source's full congestion window lands in
the bottleneck queue at once; above it, rate feedback has already throttled
the sources and the queue is set by the last slow-start round before the
overload is detected.

The model uses the rounded 2.83 us cell time and its 353356 cells/s
reciprocal so that its numbers line up with the published table; the
simulator itself works from the exact link rate.
"""
import math
from dataclasses import dataclass

from .atm import cells_for_segment
from .engine import PS_PER_S

CELL_TIME_US = 2.83
BURST_RATE = 353356  # floor(1e6 / CELL_TIME_US)

TABLE1_SOURCES = (2, 3, 5, 10, 20) + tuple(range(30, 201, 10))


@dataclass(frozen=True)
class AnalyticInputs:
    n: int
    cwnd_max: int = 65536
    t: float = 1e-3
    g: float = 50e-6
    mss: int = 512
    d: float = 1000.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.cwnd_max <= 0 or self.mss <= 0:
            raise ValueError("cwnd_max and mss must be positive")
        if self.t <= 0 or self.g < 0 or self.d < 0:
            raise ValueError("t must be positive, g and d non-negative")


def _ps(seconds):
    return int(round(seconds * PS_PER_S))


def overload_threshold(t, g):
    """Largest source count whose staggered segments still fit in one period."""
    if g <= 0:
        raise ValueError("g must be positive")
    return _ps(t) // _ps(g)


def queue_under(n, cwnd_max):
    return n * (cwnd_max // 48)


def queue_over(n, t):
    if t <= 0:
        raise ValueError("t must be positive")
    # per-source burst in whole cells; t is taken at picosecond resolution
    per_source = BURST_RATE * _ps(t) // PS_PER_S
    return n * per_source


def rounds_to_overload(t, mss):
    if t <= 0:
        raise ValueError("t must be positive")
    ratio = t * 1e6 / (CELL_TIME_US * cells_for_segment(mss))
    return math.ceil(math.log2(ratio))


def encapsulated_burst(n, cwnd_max, mss):
    """Cells in N simultaneous full-window bursts, AAL5 overhead included."""
    return n * (cwnd_max // mss) * cells_for_segment(mss)


def is_overloaded(inputs):
    return inputs.n > overload_threshold(inputs.t, inputs.g)


def predict(inputs):
    if is_overloaded(inputs):
        return queue_over(inputs.n, inputs.t)
    return queue_under(inputs.n, inputs.cwnd_max)


def table1_analytic(sources=TABLE1_SOURCES, **params):
    return [(n, predict(AnalyticInputs(n=n, **params))) for n in sources]
