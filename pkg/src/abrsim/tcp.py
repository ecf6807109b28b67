"""TCP sender and receiver windows over a loss-free path.

Connection state is a pair of rows, one integer and one float, so that the
simulation kernel can hold every connection in two arrays.  Windows are in
bytes; congestion avoidance accumulates fractional bytes.
"""
import numpy as np

from ._jit import njit
from .engine import ms

# integer columns
SND_UNA = 0
SND_NXT = 1
BACKLOG = 2
MSS = 3
RCVWND = 4
CWND_MAX = 5
RETX = 6
DEADLINE = 7  # pending retransmission deadline, -1 when disarmed
TIMER_EVENT = 8  # 1 while a timer event sits in the event queue
WRITTEN = 9
RTO = 10
SEGMENTS = 11
SND_MAX = 12  # highest byte offset ever sent; survives a go-back-N rewind
N_INT = 13

# float columns
CWND = 0
SSTHRESH = 1
N_FLT = 2

DEFAULT_SSTHRESH = 65536
DEFAULT_RTO = ms(500)

OK = 0
STALE_ACK = 1
ACK_BEYOND_SENT = 2


def new_conns(n, mss=512, cwnd_max=65536, rcvwnd=65536, ssthresh=DEFAULT_SSTHRESH, rto=DEFAULT_RTO):
    ti = np.zeros((n, N_INT), dtype=np.int64)
    tf = np.zeros((n, N_FLT), dtype=np.float64)
    ti[:, MSS] = mss
    ti[:, RCVWND] = rcvwnd
    ti[:, CWND_MAX] = cwnd_max
    ti[:, DEADLINE] = -1
    ti[:, RTO] = rto
    tf[:, CWND] = mss
    tf[:, SSTHRESH] = ssthresh
    return ti, tf


def new_receivers(n):
    return np.zeros(n, dtype=np.int64)


@njit
def in_slow_start(tf, c):
    return tf[c, CWND] < tf[c, SSTHRESH]


@njit
def send_window(ti, tf, c):
    cwnd = tf[c, CWND]
    rcv = ti[c, RCVWND]
    return cwnd if cwnd < rcv else float(rcv)


@njit
def app_write(ti, c, nbytes):
    if nbytes < 1:
        raise ValueError("write size must be positive")
    ti[c, BACKLOG] += nbytes
    ti[c, WRITTEN] += nbytes


@njit
def try_send(ti, tf, c, now, out):
    """Segment as much backlog as the window allows.

    Writes ``(start_byte, length)`` rows into ``out`` and returns how many
    were written.  Stops early if ``out`` fills; call again to continue.
    """
    wnd = send_window(ti, tf, c)
    mss = ti[c, MSS]
    k = 0
    while ti[c, BACKLOG] > 0 and k < out.shape[0]:
        seg = min(mss, ti[c, BACKLOG])
        if ti[c, SND_NXT] - ti[c, SND_UNA] + seg > wnd:
            break
        out[k, 0] = ti[c, SND_NXT]
        out[k, 1] = seg
        ti[c, SND_NXT] += seg
        ti[c, BACKLOG] -= seg
        if ti[c, SND_NXT] > ti[c, SND_MAX]:
            ti[c, SND_MAX] = ti[c, SND_NXT]
        ti[c, SEGMENTS] += 1
        k += 1
    if k > 0 and ti[c, DEADLINE] < 0:
        ti[c, DEADLINE] = now + ti[c, RTO]
    return k


@njit
def on_ack(ti, tf, c, ack_byte, now):
    """Apply a cumulative ACK; returns a status code (``OK`` on success)."""
    if ack_byte <= ti[c, SND_UNA]:
        return STALE_ACK
    if ack_byte > ti[c, SND_MAX]:
        return ACK_BEYOND_SENT
    if ack_byte > ti[c, SND_NXT]:
        # late ACK for data sent before a timeout rewind: no need to resend it
        ti[c, BACKLOG] -= ack_byte - ti[c, SND_NXT]
        ti[c, SND_NXT] = ack_byte
    ti[c, SND_UNA] = ack_byte
    mss = float(ti[c, MSS])
    cwnd = tf[c, CWND]
    if cwnd < tf[c, SSTHRESH]:
        cwnd += mss
    else:
        cwnd += mss * mss / cwnd
    cap = float(min(ti[c, CWND_MAX], ti[c, RCVWND]))
    if cwnd > cap:
        cwnd = cap
    tf[c, CWND] = cwnd
    if ti[c, SND_NXT] > ti[c, SND_UNA]:
        ti[c, DEADLINE] = now + ti[c, RTO]
    else:
        ti[c, DEADLINE] = -1
    return OK


@njit
def on_timeout(ti, tf, c):
    mss = float(ti[c, MSS])
    half = tf[c, CWND] / 2.0
    rcv = float(ti[c, RCVWND])
    tf[c, SSTHRESH] = max(2.0 * mss, min(half, rcv))
    tf[c, CWND] = mss
    # go back N: unacknowledged bytes are segmented again
    ti[c, BACKLOG] += ti[c, SND_NXT] - ti[c, SND_UNA]
    ti[c, SND_NXT] = ti[c, SND_UNA]
    ti[c, RETX] += 1
    ti[c, DEADLINE] = -1


@njit
def receiver_on_segment(rcv_nxt, c, start, length):
    """Deliver a segment in order and return the cumulative ACK byte.

    A segment wholly below ``rcv_nxt`` is a retransmitted duplicate and is
    re-acknowledged, one straddling it contributes its new bytes, and one
    leaving a gap returns -1.
    """
    expected = rcv_nxt[c]
    if start > expected:
        return -1
    if start + length > expected:
        rcv_nxt[c] = start + length
    return rcv_nxt[c]
