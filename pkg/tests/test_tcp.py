import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abrsim import tcp
from abrsim.engine import ms


def conn(**kw):
    ti, tf = tcp.new_conns(1, **kw)
    return ti, tf, np.zeros((300, 2), dtype=np.int64)


def sent(out, k):
    return [tuple(r) for r in out[:k]]


def test_single_mss_write_goes_out_immediately():
    ti, tf, out = conn()
    tcp.app_write(ti, 0, 512)
    assert sent(out, tcp.try_send(ti, tf, 0, 0, out)) == [(0, 512)]


def test_sub_mss_write_is_not_delayed():
    ti, tf, out = conn()
    tcp.app_write(ti, 0, 100)
    assert sent(out, tcp.try_send(ti, tf, 0, 0, out)) == [(0, 100)]


def test_full_window_burst():
    ti, tf, out = conn()
    tf[0, tcp.CWND] = 65536
    tcp.app_write(ti, 0, 65536)
    k = tcp.try_send(ti, tf, 0, 0, out)
    assert k == 128
    assert all(length == 512 for _, length in sent(out, k))


def test_window_over_mss_quotient():
    ti, tf, out = conn()
    tf[0, tcp.CWND] = 1024
    tcp.app_write(ti, 0, 4096)
    assert tcp.try_send(ti, tf, 0, 0, out) == 2
    assert tcp.try_send(ti, tf, 0, 0, out) == 0


def test_receiver_window_binds():
    ti, tf, out = conn(rcvwnd=512)
    tf[0, tcp.CWND] = 4096
    tcp.app_write(ti, 0, 4096)
    assert tcp.try_send(ti, tf, 0, 0, out) == 1


def test_first_send_arms_timer():
    ti, tf, out = conn()
    tcp.app_write(ti, 0, 512)
    tcp.try_send(ti, tf, 0, ms(3), out)
    assert ti[0, tcp.DEADLINE] == ms(3) + ms(500)


def test_slow_start_increment():
    ti, tf, out = conn()
    tcp.app_write(ti, 0, 512)
    tcp.try_send(ti, tf, 0, 0, out)
    assert tcp.on_ack(ti, tf, 0, 512, ms(30)) == tcp.OK
    assert tf[0, tcp.CWND] == 1024
    assert ti[0, tcp.DEADLINE] == -1


def test_congestion_avoidance_increment():
    ti, tf, out = conn(ssthresh=2048)
    tf[0, tcp.CWND] = 2048
    tcp.app_write(ti, 0, 1024)
    tcp.try_send(ti, tf, 0, 0, out)
    assert not tcp.in_slow_start(tf, 0)
    tcp.on_ack(ti, tf, 0, 512, ms(1))
    assert tf[0, tcp.CWND] == 2176
    # data still outstanding: timer restarted from this ACK
    assert ti[0, tcp.DEADLINE] == ms(1) + ms(500)


def test_growth_capped_at_cwnd_max():
    ti, tf, out = conn()
    tf[0, tcp.CWND] = 65024
    tcp.app_write(ti, 0, 2048)
    tcp.try_send(ti, tf, 0, 0, out)
    tcp.on_ack(ti, tf, 0, 512, 1)
    assert tf[0, tcp.CWND] == 65536
    tcp.on_ack(ti, tf, 0, 1024, 2)
    assert tf[0, tcp.CWND] == 65536


def test_stale_and_future_acks_are_flagged():
    ti, tf, out = conn()
    tcp.app_write(ti, 0, 512)
    tcp.try_send(ti, tf, 0, 0, out)
    assert tcp.on_ack(ti, tf, 0, 0, 1) == tcp.STALE_ACK
    assert tcp.on_ack(ti, tf, 0, 1024, 1) == tcp.ACK_BEYOND_SENT


@pytest.mark.parametrize("cwnd, ssthresh", [(40960, 20480), (1024, 1024)])
def test_timeout_rules(cwnd, ssthresh):
    ti, tf, out = conn()
    tf[0, tcp.CWND] = cwnd
    tcp.app_write(ti, 0, 1024)
    tcp.try_send(ti, tf, 0, 0, out)
    tcp.on_timeout(ti, tf, 0)
    assert tf[0, tcp.SSTHRESH] == ssthresh
    assert tf[0, tcp.CWND] == 512
    assert tcp.in_slow_start(tf, 0)
    assert ti[0, tcp.SND_NXT] == ti[0, tcp.SND_UNA] == 0
    assert ti[0, tcp.BACKLOG] == 1024
    assert ti[0, tcp.RETX] == 1


def test_late_ack_after_timeout_skips_acknowledged_data():
    ti, tf, out = conn()
    tf[0, tcp.CWND] = 2048
    tcp.app_write(ti, 0, 2048)
    assert tcp.try_send(ti, tf, 0, 0, out) == 4
    tcp.on_timeout(ti, tf, 0)
    assert ti[0, tcp.BACKLOG] == 2048
    # the original first two segments were delivered after all
    assert tcp.on_ack(ti, tf, 0, 1024, ms(600)) == tcp.OK
    assert ti[0, tcp.SND_UNA] == ti[0, tcp.SND_NXT] == 1024
    assert ti[0, tcp.BACKLOG] == 1024
    assert tcp.on_ack(ti, tf, 0, 4096, ms(600)) == tcp.ACK_BEYOND_SENT


def test_receiver_takes_new_bytes_of_straddling_segment():
    rcv = tcp.new_receivers(1)
    tcp.receiver_on_segment(rcv, 0, 0, 100)
    assert tcp.receiver_on_segment(rcv, 0, 0, 512) == 512


def test_receiver_cumulative_acks():
    rcv = tcp.new_receivers(1)
    assert tcp.receiver_on_segment(rcv, 0, 0, 512) == 512
    assert tcp.receiver_on_segment(rcv, 0, 512, 512) == 1024
    assert tcp.receiver_on_segment(rcv, 0, 1024, 100) == 1124


def test_receiver_rejects_gap_and_reacks_duplicate():
    rcv = tcp.new_receivers(1)
    tcp.receiver_on_segment(rcv, 0, 0, 512)
    assert tcp.receiver_on_segment(rcv, 0, 1024, 512) == -1
    assert tcp.receiver_on_segment(rcv, 0, 0, 512) == 512


def test_cwnd_doubles_each_round_trip():
    # one round = send the whole window, then receive one ACK per segment
    ti, tf, out = conn()
    tcp.app_write(ti, 0, 10**6)
    windows = []
    for rnd in range(6):
        windows.append(tf[0, tcp.CWND])
        k = tcp.try_send(ti, tf, 0, rnd, out)
        for start, length in sent(out, k):
            assert tcp.on_ack(ti, tf, 0, start + length, rnd) == tcp.OK
    assert windows == [512 * 2**r for r in range(6)]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["write", "ack", "send", "timeout"]), st.integers(1, 3000)), max_size=60))
def test_window_discipline_and_byte_conservation(ops):
    ti, tf, out = conn()
    rcv = tcp.new_receivers(1)
    in_flight = []  # segments sent but not yet delivered, FIFO
    for op, x in ops:
        if op == "write":
            tcp.app_write(ti, 0, x)
        elif op == "send":
            k = tcp.try_send(ti, tf, 0, 0, out)
            in_flight.extend(sent(out, k))
        elif op == "ack" and in_flight:
            start, length = in_flight.pop(0)
            ack = tcp.receiver_on_segment(rcv, 0, start, length)
            assert ack >= 0
            status = tcp.on_ack(ti, tf, 0, ack, 0)
            assert status in (tcp.OK, tcp.STALE_ACK)
        elif op == "timeout" and ti[0, tcp.SND_NXT] > ti[0, tcp.SND_UNA]:
            tcp.on_timeout(ti, tf, 0)
        una, nxt = ti[0, tcp.SND_UNA], ti[0, tcp.SND_NXT]
        assert una <= nxt
        assert nxt - una <= tcp.send_window(ti, tf, 0)
        assert rcv[0] <= ti[0, tcp.SND_MAX] <= ti[0, tcp.WRITTEN]
        assert ti[0, tcp.BACKLOG] == ti[0, tcp.WRITTEN] - nxt
        assert 512 <= tf[0, tcp.CWND] <= 65536
        assert tcp.in_slow_start(tf, 0) == (tf[0, tcp.CWND] < tf[0, tcp.SSTHRESH])
        assert una <= nxt <= ti[0, tcp.WRITTEN]
