"""Cell-level event loop for the N-source, two-switch topology.

Forward path: source i -> switch 1 -> bottleneck -> switch 2 -> destination i.
Reverse path: destination i -> switch 2 -> switch 1 -> source i, carrying
backward RM cells and TCP acknowledgements.  Every hop is a FIFO port (see
``atm.transmit``); the bottleneck port and the switch-2 ports towards the
destinations run ERICA+.
"""
import numpy as np

from . import abr, erica, tcp
from ._jit import njit
from .atm import ACK, BRM, FRM, ack_cells, queue_len, transmit
from .engine import heap_new, heap_peek_time, heap_pop, heap_push

# config vector
C_N = 0
C_MSS = 1
C_T = 2
C_G = 3
C_BUILD = 4
C_CWND_MAX = 5
C_DURATION = 6
C_BURST_AT = 7
C_INTERVAL = 8
C_LEDGER_EVERY = 9
C_BURST = 10
C_SIZE = 11

# event payload
EV_TYPE = 0
EV_VC = 1
EV_NODE = 2
EV_CELL = 3
EV_LAST = 4
EV_START = 5
EV_LEN = 6
EV_ARG = 7
EV_NI = 8
EV_ER = 0
EV_CCR = 1
EV_NF = 2

# event types
ARRIVE = 0
EMIT = 1
APP_TICK = 2
BURST = 3
TIMER = 4
INTERVAL = 5

# nodes a cell can arrive at
AT_SW1_FWD = 0
AT_SW2_FWD = 1
AT_DST = 2
AT_SW2_REV = 3
AT_SW1_REV = 4
AT_SRC = 5

# port layout
BOTTLENECK = 0
SW2_REV = 1

# stats vector
S_EVENTS = 0
S_ERROR = 1
S_ERROR_TIME = 2
S_ERROR_VC = 3
S_LEDGER_CHECKS = 4
S_LEDGER_FAILS = 5
S_CLOCK = 6
S_INTERVALS = 7
S_SIZE = 8

# error codes
E_NONE = 0
E_STALE_ACK = 1
E_ACK_BEYOND_SENT = 2
E_BROKEN_FRAME = 3
E_OUT_OF_ORDER = 4
E_LEDGER = 5

ERROR_TEXT = {
    E_NONE: "",
    E_STALE_ACK: "stale acknowledgement on a loss-free path",
    E_ACK_BEYOND_SENT: "acknowledgement beyond data sent",
    E_BROKEN_FRAME: "frame completed with missing cells",
    E_OUT_OF_ORDER: "segment delivered out of order",
    E_LEDGER: "cell conservation ledger out of balance",
}


def port_count(n):
    return 2 + 4 * n


@njit
def src_port(n, vc):
    return 2 + vc


@njit
def sw2_port(n, vc):
    return 2 + n + vc


@njit
def dst_port(n, vc):
    return 2 + 2 * n + vc


@njit
def sw1_port(n, vc):
    return 2 + 3 * n + vc


@njit
def _push_cell(h, t, vc, node, cell, last, start, length, er, ccr):
    h, s, _ = heap_push(h, t)
    row = h.ev_int[s]
    row[EV_TYPE] = ARRIVE
    row[EV_VC] = vc
    row[EV_NODE] = node
    row[EV_CELL] = cell
    row[EV_LAST] = last
    row[EV_START] = start
    row[EV_LEN] = length
    row[EV_ARG] = 0
    h.ev_flt[s, EV_ER] = er
    h.ev_flt[s, EV_CCR] = ccr
    return h


@njit
def _push_ctl(h, t, typ, vc, arg):
    h, s, _ = heap_push(h, t)
    row = h.ev_int[s]
    row[EV_TYPE] = typ
    row[EV_VC] = vc
    row[EV_ARG] = arg
    return h


@njit
def _pump(h, ti, tf, ai, segs, vc, now, scratch):
    """Move whatever TCP may send into the ABR queue and keep timers armed."""
    while True:
        k = tcp.try_send(ti, tf, vc, now, scratch)
        for j in range(k):
            if abr.enqueue_segment(ai, segs, vc, scratch[j, 0], scratch[j, 1]):
                h = _push_ctl(h, abr.first_emission(ai, vc, now), EMIT, vc, 0)
        if k < scratch.shape[0]:
            break
    if ti[vc, tcp.DEADLINE] >= 0 and ti[vc, tcp.TIMER_EVENT] == 0:
        ti[vc, tcp.TIMER_EVENT] = 1
        h = _push_ctl(h, ti[vc, tcp.DEADLINE], TIMER, vc, 0)
    return h


@njit
def _ledger_ok(h, n, fwd_sent, fwd_done, rev_sent, rev_done, fwd_fly, rev_fly):
    fwd_fly[:] = 0
    rev_fly[:] = 0
    for i in range(h.meta[0]):
        s = h.key_slot[i]
        if h.cancelled[s] != 0 or h.ev_int[s, EV_TYPE] != ARRIVE:
            continue
        node = h.ev_int[s, EV_NODE]
        vc = h.ev_int[s, EV_VC]
        if node <= AT_DST:
            fwd_fly[vc] += 1
        else:
            rev_fly[vc] += 1
    for vc in range(n):
        if fwd_sent[vc] != fwd_done[vc] + fwd_fly[vc]:
            return False
        if rev_sent[vc] != rev_done[vc] + rev_fly[vc]:
            return False
    return True


@njit
def _grow_int_rows(a, k):
    if k < a.shape[0]:
        return a
    b = np.zeros((a.shape[0] * 2, a.shape[1]), dtype=np.int64)
    b[: a.shape[0]] = a
    return b


@njit
def _grow_flt_rows(a, k):
    if k < a.shape[0]:
        return a
    b = np.zeros((a.shape[0] * 2, a.shape[1]), dtype=np.float64)
    b[: a.shape[0]] = a
    return b


@njit
def simulate(cfg, ep, ti, tf, rcv, ai, af, segs, di, ports, ei, ef, last_seen, ccr_tab):
    n = cfg[C_N]
    t_ps = cfg[C_T]
    g_ps = cfg[C_G]
    build = cfg[C_BUILD]
    duration = cfg[C_DURATION]
    interval = cfg[C_INTERVAL]
    ledger_every = cfg[C_LEDGER_EVERY]
    n_erica = ei.shape[0]

    stats = np.zeros(S_SIZE, dtype=np.int64)
    trace = np.zeros((1024, 2), dtype=np.int64)
    n_trace = 0
    acr_trace = np.zeros((64, n), dtype=np.float64)
    n_acr = 0
    fwd_sent = np.zeros(n, dtype=np.int64)
    fwd_done = np.zeros(n, dtype=np.int64)
    rev_sent = np.zeros(n, dtype=np.int64)
    rev_done = np.zeros(n, dtype=np.int64)
    fwd_fly = np.zeros(n, dtype=np.int64)
    rev_fly = np.zeros(n, dtype=np.int64)
    scratch = np.zeros((ti[0, tcp.RCVWND] // ti[0, tcp.MSS] + 2, 2), dtype=np.int64)
    cellbuf = np.zeros(4, dtype=np.int64)
    rmbuf = np.zeros(2, dtype=np.float64)
    n_ack = ack_cells()
    q_max = np.int64(0)

    h = heap_new(4096 + 256 * n, EV_NI, EV_NF)
    for vc in range(n):
        first = vc * g_ps
        if build > 0 and first <= duration:
            h = _push_ctl(h, first, APP_TICK, vc, 0)
        if cfg[C_BURST] != 0 and cfg[C_BURST_AT] <= duration:
            h = _push_ctl(h, cfg[C_BURST_AT], BURST, vc, 0)
    if interval <= duration:
        h = _push_ctl(h, interval, INTERVAL, 0, 0)

    while True:
        t = heap_peek_time(h)
        if t < 0 or t > duration:
            break
        s = heap_pop(h)
        now = t
        typ = h.ev_int[s, EV_TYPE]
        vc = h.ev_int[s, EV_VC]
        node = h.ev_int[s, EV_NODE]
        cell = h.ev_int[s, EV_CELL]
        last = h.ev_int[s, EV_LAST]
        start = h.ev_int[s, EV_START]
        length = h.ev_int[s, EV_LEN]
        arg = h.ev_int[s, EV_ARG]
        er = h.ev_flt[s, EV_ER]
        ccr = h.ev_flt[s, EV_CCR]
        stats[S_EVENTS] += 1
        err = E_NONE

        if typ == ARRIVE:
            if node == AT_SW1_FWD:
                erica.enqueue(ei, last_seen, ccr_tab, 0, vc, cell, ccr)
                arrival, q = transmit(ports, BOTTLENECK, now)
                if q > q_max:
                    q_max = q
                    trace = _grow_int_rows(trace, n_trace)
                    trace[n_trace, 0] = now
                    trace[n_trace, 1] = q
                    n_trace += 1
                h = _push_cell(h, arrival, vc, AT_SW2_FWD, cell, last, start, length, er, ccr)
            elif node == AT_SW2_FWD:
                erica.enqueue(ei, last_seen, ccr_tab, 1 + vc, vc, cell, ccr)
                arrival, q = transmit(ports, sw2_port(n, vc), now)
                h = _push_cell(h, arrival, vc, AT_DST, cell, last, start, length, er, ccr)
            elif node == AT_DST:
                fwd_done[vc] += 1
                action = abr.dest_on_cell(di, vc, cell, last, length)
                if action == abr.TURNAROUND:
                    arrival, q = transmit(ports, dst_port(n, vc), now)
                    rev_sent[vc] += 1
                    h = _push_cell(h, arrival, vc, AT_SW2_REV, abr.turnaround_kind(cell), 0, 0, 0, er, ccr)
                elif action == abr.DELIVER:
                    ack = tcp.receiver_on_segment(rcv, vc, start, length)
                    if ack < 0:
                        err = E_OUT_OF_ORDER
                    else:
                        for k in range(n_ack):
                            arrival, q = transmit(ports, dst_port(n, vc), now)
                            rev_sent[vc] += 1
                            h = _push_cell(h, arrival, vc, AT_SW2_REV, ACK, 1 if k == n_ack - 1 else 0, ack, 0, 0.0, 0.0)
                elif action == abr.BROKEN_FRAME:
                    err = E_BROKEN_FRAME
            elif node == AT_SW2_REV:
                if cell == BRM:
                    er = erica.on_brm(ei, ef, ccr_tab, 1 + vc, vc, er, ep)
                arrival, q = transmit(ports, SW2_REV, now)
                h = _push_cell(h, arrival, vc, AT_SW1_REV, cell, last, start, length, er, ccr)
            elif node == AT_SW1_REV:
                if cell == BRM:
                    er = erica.on_brm(ei, ef, ccr_tab, 0, vc, er, ep)
                arrival, q = transmit(ports, sw1_port(n, vc), now)
                h = _push_cell(h, arrival, vc, AT_SRC, cell, last, start, length, er, ccr)
            else:
                rev_done[vc] += 1
                if cell == BRM:
                    abr.on_brm(af, vc, er)
                elif cell == ACK and last == 1:
                    status = tcp.on_ack(ti, tf, vc, start, now)
                    if status == tcp.STALE_ACK:
                        # a retransmitted duplicate may be re-acknowledged
                        if ti[vc, tcp.RETX] == 0:
                            err = E_STALE_ACK
                    elif status == tcp.ACK_BEYOND_SENT:
                        err = E_ACK_BEYOND_SENT
                    else:
                        h = _pump(h, ti, tf, ai, segs, vc, now, scratch)
        elif typ == EMIT:
            more = abr.emit_next(ai, af, segs, vc, now, cellbuf, rmbuf)
            arrival, q = transmit(ports, src_port(n, vc), now)
            fwd_sent[vc] += 1
            h = _push_cell(h, arrival, vc, AT_SW1_FWD, cellbuf[0], cellbuf[1], cellbuf[2], cellbuf[3], rmbuf[0], rmbuf[1])
            if more:
                h = _push_ctl(h, ai[vc, abr.NEXT_SEND], EMIT, vc, 0)
        elif typ == APP_TICK:
            tcp.app_write(ti, vc, ti[vc, tcp.MSS])
            h = _pump(h, ti, tf, ai, segs, vc, now, scratch)
            if arg + 1 < build and now + t_ps <= duration:
                h = _push_ctl(h, now + t_ps, APP_TICK, vc, arg + 1)
        elif typ == BURST:
            tcp.app_write(ti, vc, cfg[C_CWND_MAX])
            h = _pump(h, ti, tf, ai, segs, vc, now, scratch)
        elif typ == TIMER:
            ti[vc, tcp.TIMER_EVENT] = 0
            deadline = ti[vc, tcp.DEADLINE]
            if deadline > now:
                ti[vc, tcp.TIMER_EVENT] = 1
                h = _push_ctl(h, deadline, TIMER, vc, 0)
            elif deadline >= 0:
                tcp.on_timeout(ti, tf, vc)
                h = _pump(h, ti, tf, ai, segs, vc, now, scratch)
        else:
            for e in range(n_erica):
                erica.end_interval(ei, ef, e, queue_len(ports, ei[e, erica.PORT], now), ep)
            stats[S_INTERVALS] += 1
            trace = _grow_int_rows(trace, n_trace)
            trace[n_trace, 0] = now
            trace[n_trace, 1] = queue_len(ports, BOTTLENECK, now)
            n_trace += 1
            acr_trace = _grow_flt_rows(acr_trace, n_acr)
            for v in range(n):
                acr_trace[n_acr, v] = af[v, abr.ACR]
            n_acr += 1
            if ledger_every > 0 and stats[S_INTERVALS] % ledger_every == 0:
                stats[S_LEDGER_CHECKS] += 1
                if not _ledger_ok(h, n, fwd_sent, fwd_done, rev_sent, rev_done, fwd_fly, rev_fly):
                    stats[S_LEDGER_FAILS] += 1
                    err = E_LEDGER
            if now + interval <= duration:
                h = _push_ctl(h, now + interval, INTERVAL, 0, 0)

        if err != E_NONE:
            stats[S_ERROR] = err
            stats[S_ERROR_TIME] = now
            stats[S_ERROR_VC] = vc
            break

    stats[S_CLOCK] = duration if stats[S_ERROR] == E_NONE else h.meta[3]
    stats[S_LEDGER_CHECKS] += 1
    if not _ledger_ok(h, n, fwd_sent, fwd_done, rev_sent, rev_done, fwd_fly, rev_fly):
        stats[S_LEDGER_FAILS] += 1
        if stats[S_ERROR] == E_NONE:
            stats[S_ERROR] = E_LEDGER
    counters = np.empty((n, 6), dtype=np.int64)
    counters[:, 0] = fwd_sent
    counters[:, 1] = fwd_done
    counters[:, 2] = fwd_fly
    counters[:, 3] = rev_sent
    counters[:, 4] = rev_done
    counters[:, 5] = rev_fly
    return stats, trace[:n_trace].copy(), acr_trace[:n_acr].copy(), counters
