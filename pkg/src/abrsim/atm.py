"""ATM cells, AAL5 encapsulation arithmetic, and link timing.

Links are FIFO servers with a constant per-cell service time followed by a
fixed propagation delay.  A port keeps only the time at which its last
accepted cell finishes transmission; since every cell takes the same service
time, the number of cells held by the port at any instant follows from that
single value.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .engine import PS_PER_S, PS_PER_US

CELL_BITS = 424
CELL_PAYLOAD = 48
# TCP 20 + IP 20 + LLC/SNAP 8 + AAL5 8
ENCAP_OVERHEAD = 56
OC3_LINE_RATE = 155.52e6
OC3_PAYLOAD_RATE = 149.76e6
PER_KM_DELAY_PS = 5 * PS_PER_US

# cell kinds
DATA = 0
FRM = 1
BRM = 2
ACK = 3  # data cell of a reverse-path TCP acknowledgement

# port state columns
P_BUSY_UNTIL = 0
P_SVC = 1
P_PROP = 2
P_QMAX = 3
P_QMAX_TIME = 4
P_CELLS = 5
P_NCOLS = 6


@dataclass(frozen=True)
class LinkParams:
    line_rate: float = OC3_LINE_RATE
    payload_rate: float = OC3_PAYLOAD_RATE
    length_km: float = 1000.0
    per_km_delay_ps: int = PER_KM_DELAY_PS

    @property
    def cell_rate(self):
        """Cells per second at the payload rate."""
        return self.payload_rate / CELL_BITS


@njit
def cells_for_segment(payload_bytes):
    if payload_bytes < 1:
        raise ValueError("segment payload must be at least one byte")
    return (payload_bytes + ENCAP_OVERHEAD + CELL_PAYLOAD - 1) // CELL_PAYLOAD


@njit
def ack_cells():
    """Cells in a zero-payload acknowledgement segment."""
    return (ENCAP_OVERHEAD + CELL_PAYLOAD - 1) // CELL_PAYLOAD


def cell_service_time(link):
    """Picoseconds to clock one 424-bit cell onto ``link``."""
    if link.payload_rate <= 0:
        raise ValueError("payload_rate must be positive")
    return rate_to_interval(link.payload_rate / CELL_BITS)


def propagation_delay(link):
    if link.length_km < 0:
        raise ValueError("length_km must be non-negative")
    return int(round(link.length_km * link.per_km_delay_ps))


@njit
def rate_to_interval(cells_per_s):
    """Picoseconds between cells at ``cells_per_s``, rounded to nearest."""
    return np.int64(np.round(PS_PER_S / cells_per_s))


def new_ports(n):
    return np.zeros((n, P_NCOLS), dtype=np.int64)


def init_port(ports, p, link):
    ports[p, P_SVC] = cell_service_time(link)
    ports[p, P_PROP] = propagation_delay(link)


@njit
def transmit(ports, p, now):
    """Hand one cell to port ``p`` at ``now``.

    Returns ``(arrival_time, queue_len)``: when the cell reaches the far end of
    the link, and how many cells the port holds (waiting or on the wire)
    right after accepting it.
    """
    svc = ports[p, P_SVC]
    start = ports[p, P_BUSY_UNTIL]
    if start < now:
        start = now
    done = start + svc
    ports[p, P_BUSY_UNTIL] = done
    ports[p, P_CELLS] += 1
    q = (done - now + svc - 1) // svc
    if q > ports[p, P_QMAX]:
        ports[p, P_QMAX] = q
        ports[p, P_QMAX_TIME] = now
    return done + ports[p, P_PROP], q


@njit
def queue_len(ports, p, now):
    backlog = ports[p, P_BUSY_UNTIL] - now
    if backlog <= 0:
        return 0
    svc = ports[p, P_SVC]
    return (backlog + svc - 1) // svc
