"""ERICA+ explicit-rate feedback at a switch output port.

Each port measures arriving cells and distinct active VCs over fixed
averaging intervals.  At the end of an interval it scales the link capacity
by a hyperbolic function of the queueing delay, smooths the VC count and the
load factor exponentially, and derives the fair share used to stamp ER into
backward RM cells.
"""
from dataclasses import dataclass, astuple

import numpy as np

from ._jit import njit
from .atm import FRM

# integer columns
RECEIVED = 0
ACTIVE = 1
INTERVALS = 2
PORT = 3
N_INT = 4

# float columns
N_AVG = 0
Z_AVG = 1
FAIRSHARE = 2
TARGET = 3
CAPACITY = 4
INPUT_RATE = 5
Z_NOW = 6
N_FLT = 7

# parameter vector layout
T0 = 0
A = 1
B = 2
QDLF = 3
INTERVAL = 4
ALPHA_N = 5
ALPHA_Z = 6
Z_FLOOR = 7


@dataclass(frozen=True)
class EricaParams:
    """ERICA+ knobs; times in seconds."""

    t0: float = 500e-6
    a: float = 1.15
    b: float = 1.05
    qdlf: float = 0.5
    interval: float = 1e-3
    alpha_n: float = 0.2
    alpha_z: float = 0.2
    z_floor: float = 0.01

    def __post_init__(self):
        if not (self.a > 1 and self.b > 1):
            raise ValueError("curve parameters a and b must exceed 1")
        if not 0 < self.qdlf <= 1:
            raise ValueError("qdlf must lie in (0, 1]")
        if self.t0 <= 0 or self.interval <= 0:
            raise ValueError("t0 and interval must be positive")
        for w in (self.alpha_n, self.alpha_z):
            if not 0 < w <= 1:
                raise ValueError("averaging weights must lie in (0, 1]")
        if self.z_floor <= 0:
            raise ValueError("z_floor must be positive")

    def as_array(self):
        return np.array(astuple(self), dtype=np.float64)


def new_ports(n_ports, n_vcs, capacity, port_index):
    ei = np.zeros((n_ports, N_INT), dtype=np.int64)
    ef = np.zeros((n_ports, N_FLT), dtype=np.float64)
    ei[:, PORT] = port_index
    ef[:, CAPACITY] = capacity
    ef[:, TARGET] = capacity
    ef[:, N_AVG] = 1.0
    last_seen = np.full((n_ports, n_vcs), -1, dtype=np.int64)
    ccr = np.zeros((n_ports, n_vcs), dtype=np.float64)
    return ei, ef, last_seen, ccr


@njit
def queue_fraction(q_delay, t0, a, b, qdlf):
    """Capacity multiplier for a queueing delay of ``q_delay`` seconds."""
    x = q_delay / t0
    if x <= 1.0:
        f = a / ((a - 1.0) * x + 1.0)
    else:
        f = b / ((b - 1.0) * x + 1.0)
    return f if f > qdlf else qdlf


@njit
def enqueue(ei, last_seen, ccr_tab, e, vc, kind, ccr):
    ei[e, RECEIVED] += 1
    cur = ei[e, INTERVALS]
    if last_seen[e, vc] != cur:
        last_seen[e, vc] = cur
        ei[e, ACTIVE] += 1
    if kind == FRM:
        ccr_tab[e, vc] = ccr


@njit
def end_interval(ei, ef, e, q_len, p):
    cap = ef[e, CAPACITY]
    input_rate = ei[e, RECEIVED] / p[INTERVAL]
    target = queue_fraction(q_len / cap, p[T0], p[A], p[B], p[QDLF]) * cap
    n_now = float(max(ei[e, ACTIVE], 1))
    z_now = input_rate / target
    if ei[e, INTERVALS] == 0:
        n_avg = n_now
        z_avg = z_now
    else:
        n_avg = p[ALPHA_N] * n_now + (1.0 - p[ALPHA_N]) * ef[e, N_AVG]
        z_avg = p[ALPHA_Z] * z_now + (1.0 - p[ALPHA_Z]) * ef[e, Z_AVG]
    ef[e, INPUT_RATE] = input_rate
    ef[e, TARGET] = target
    ef[e, Z_NOW] = z_now
    ef[e, N_AVG] = n_avg
    ef[e, Z_AVG] = z_avg
    ef[e, FAIRSHARE] = target / n_avg
    ei[e, RECEIVED] = 0
    ei[e, ACTIVE] = 0
    ei[e, INTERVALS] += 1


@njit
def on_brm(ei, ef, ccr_tab, e, vc, er, p):
    """ER to carry onward in a backward RM cell; never above ``er``."""
    if ei[e, INTERVALS] == 0:
        return er
    z = ef[e, Z_AVG]
    if z < p[Z_FLOOR]:
        z = p[Z_FLOOR]
    vcshare = ccr_tab[e, vc] / z
    calc = ef[e, FAIRSHARE]
    if vcshare > calc:
        calc = vcshare
    if calc > ef[e, TARGET]:
        calc = ef[e, TARGET]
    return calc if calc < er else er
