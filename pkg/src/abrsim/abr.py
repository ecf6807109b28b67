"""ABR end systems: rate-paced sources and RM-turnaround destinations."""
import numpy as np

from ._jit import njit
from .atm import BRM, DATA, FRM, cells_for_segment, rate_to_interval

# source integer columns
SINCE_FRM = 0
NEXT_SEND = 1
SENDING = 2  # 1 while an emission event is pending
HEAD = 3
COUNT = 4
CELL_IDX = 5
QUEUED_CELLS = 6
EMITTED = 7
FRMS = 8
NRM = 9
N_INT = 10

# source float columns
ACR = 0
PCR = 1
MCR = 2
ICR = 3
N_FLT = 4

# segment ring fields
SEG_START = 0
SEG_LEN = 1
SEG_CELLS = 2

# destination columns
IN_FRAME = 0
DELIVERED = 1
D_N_INT = 2

# dest_on_cell outcomes
NOTHING = 0
DELIVER = 1
TURNAROUND = 2
BROKEN_FRAME = -1


def new_sources(n, pcr, icr=None, mcr=0.0, nrm=32, ring=256):
    if nrm < 2:
        raise ValueError("nrm must be at least 2")
    ai = np.zeros((n, N_INT), dtype=np.int64)
    af = np.zeros((n, N_FLT), dtype=np.float64)
    ai[:, NRM] = nrm
    # first emission of every block is the FRM
    ai[:, SINCE_FRM] = nrm - 1
    af[:, PCR] = pcr
    af[:, MCR] = mcr
    af[:, ICR] = pcr if icr is None else icr
    af[:, ACR] = af[:, ICR]
    segs = np.zeros((n, ring, 3), dtype=np.int64)
    return ai, af, segs


def new_dests(n):
    return np.zeros((n, D_N_INT), dtype=np.int64)


@njit
def enqueue_segment(ai, segs, vc, start, length):
    """Queue the cells of one segment; True if the source must be started."""
    ring = segs.shape[1]
    if ai[vc, COUNT] == ring:
        raise ValueError("per-VC segment ring overflow")
    tail = (ai[vc, HEAD] + ai[vc, COUNT]) % ring
    n = cells_for_segment(length)
    segs[vc, tail, SEG_START] = start
    segs[vc, tail, SEG_LEN] = length
    segs[vc, tail, SEG_CELLS] = n
    ai[vc, COUNT] += 1
    ai[vc, QUEUED_CELLS] += n
    if ai[vc, SENDING] == 0:
        ai[vc, SENDING] = 1
        return True
    return False


@njit
def first_emission(ai, vc, now):
    t = ai[vc, NEXT_SEND]
    return t if t > now else now


@njit
def emit_next(ai, af, segs, vc, now, cell, rm):
    """Emit one cell in the current rate slot.

    Fills ``cell`` with ``(kind, last_of_frame, seg_start, seg_len)`` and
    ``rm`` with ``(er, ccr)``.  Returns True while cells remain queued, in
    which case the next slot is ``ai[vc, NEXT_SEND]``.
    """
    if ai[vc, SINCE_FRM] >= ai[vc, NRM] - 1:
        cell[0] = FRM
        cell[1] = 0
        cell[2] = 0
        cell[3] = 0
        rm[0] = af[vc, PCR]
        rm[1] = af[vc, ACR]
        ai[vc, SINCE_FRM] = 0
        ai[vc, FRMS] += 1
    else:
        ring = segs.shape[1]
        h = ai[vc, HEAD]
        idx = ai[vc, CELL_IDX]
        ncells = segs[vc, h, SEG_CELLS]
        cell[0] = DATA
        cell[1] = 1 if idx == ncells - 1 else 0
        cell[2] = segs[vc, h, SEG_START]
        cell[3] = segs[vc, h, SEG_LEN]
        rm[0] = 0.0
        rm[1] = 0.0
        if idx == ncells - 1:
            ai[vc, HEAD] = (h + 1) % ring
            ai[vc, COUNT] -= 1
            ai[vc, CELL_IDX] = 0
        else:
            ai[vc, CELL_IDX] = idx + 1
        ai[vc, QUEUED_CELLS] -= 1
        ai[vc, SINCE_FRM] += 1
    ai[vc, EMITTED] += 1
    ai[vc, NEXT_SEND] = now + rate_to_interval(af[vc, ACR])
    if ai[vc, QUEUED_CELLS] > 0:
        return True
    ai[vc, SENDING] = 0
    return False


@njit
def on_brm(af, vc, er):
    acr = er
    if acr < af[vc, MCR]:
        acr = af[vc, MCR]
    if acr > af[vc, PCR]:
        acr = af[vc, PCR]
    af[vc, ACR] = acr


@njit
def dest_on_cell(di, vc, kind, last, seg_len):
    if kind == FRM:
        return TURNAROUND
    if kind != DATA:
        return NOTHING
    di[vc, IN_FRAME] += 1
    if last == 0:
        return NOTHING
    got = di[vc, IN_FRAME]
    di[vc, IN_FRAME] = 0
    if got != cells_for_segment(seg_len):
        return BROKEN_FRAME
    di[vc, DELIVERED] += 1
    return DELIVER


@njit
def turnaround_kind(kind):
    if kind != FRM:
        raise ValueError("only forward RM cells turn around")
    return BRM
