import math
import random

import pytest

from aqmark.aqm import DropTail
from aqmark.engine import Link, Simulator
from aqmark.metrics import FlowStats
from aqmark.traffic import (RTO_MAX, ShortFlowGenerator, TcpSender, TcpSink, UdpCbrSource,
                            UdpSink)


class Collector:
    def __init__(self):
        self.pkts = []

    def receive(self, pkt):
        self.pkts.append(pkt)


def bare_sender(**kw):
    sim = Simulator()
    out = Collector()
    return sim, TcpSender(sim, 1, (out,), **kw), out


def test_slow_start_increment():
    sim, s, out = bare_sender()
    s.start(0.0)
    sim.run_until(0.0)
    assert len(out.pkts) == 1 and s.cwnd == 1.0
    s.on_ack(1, 0.05)
    assert s.cwnd == 2.0 and s.phase == "slow_start"
    assert [p.seq for p in out.pkts] == [0, 1, 2]


def test_congestion_avoidance_increment():
    sim, s, out = bare_sender()
    s.cwnd, s.ssthresh = 10.0, 5.0
    s.next_seq = 10
    s.on_ack(1, 0.1)
    assert s.cwnd == pytest.approx(10.1)
    assert s.phase == "congestion_avoidance"


def test_three_dup_acks_fast_retransmit():
    sim, s, out = bare_sender()
    s.cwnd = 16.0
    s.next_seq, s.highest_acked = 20, 4
    for _ in range(3):
        s.on_ack(4, 0.1)
    assert s.ssthresh == 8.0 and s.cwnd == 11.0
    assert [p.seq for p in out.pkts] == [4]
    assert s.fast_retransmits == 1 and s.stats is None
    s.on_ack(20, 0.2)  # full ACK ends recovery and deflates the window
    assert s.cwnd == 8.0 and not s.in_recovery


def test_dup_acks_below_recover_do_not_halve_again():
    sim, s, out = bare_sender()
    s.cwnd, s.next_seq, s.highest_acked, s.recover = 16.0, 20, 4, 10
    for _ in range(3):
        s.on_ack(4, 0.1)
    assert s.cwnd == 16.0 and s.fast_retransmits == 0


def test_timeout_collapses_window():
    sim, s, out = bare_sender()
    s.cwnd, s.next_seq, s.highest_acked = 20.0, 30, 10
    s.on_timeout(1.0)
    assert s.ssthresh == 10.0 and s.cwnd == 1.0
    assert [p.seq for p in out.pkts] == [10]  # go-back-N from the first hole


def test_rto_backoff_doubles_and_caps():
    sim, s, out = bare_sender()
    seen = []
    for _ in range(10):
        s.on_timeout(0.0)
        seen.append(s.rto)
    assert seen[:3] == [2.0, 4.0, 8.0]
    assert max(seen) == RTO_MAX


def test_timer_fires_when_nothing_acked():
    sim, s, out = bare_sender()
    s.start(0.0)
    sim.run_until(0.99)
    assert s.timeouts == 0
    sim.run_until(1.01)
    assert s.timeouts == 1 and s.rto == 2.0
    assert [p.seq for p in out.pkts] == [0, 0]


def test_rtt_estimator_first_sample():
    sim, s, out = bare_sender()
    s.start(0.0)
    sim.run_until(0.0)
    s.on_ack(1, 0.1)
    assert s.srtt == pytest.approx(0.1) and s.rttvar == pytest.approx(0.05)
    assert s.rto == pytest.approx(0.3)


def test_segment_sizes_of_finite_transfer():
    sim, s, out = bare_sender(total_bytes=20480)
    assert s.nseg == 21
    assert s.segment_size(0) == 1000 and s.segment_size(20) == 480


class WindowProbe:
    """Checks that new data never leaves with more than ceil(cwnd) segments in flight."""

    def __init__(self):
        self.sender = None
        self.checked = 0

    def receive(self, pkt):
        s = self.sender
        if pkt.seq == s.next_seq - 1 and pkt.seq not in s._retransmitted:
            assert s.in_flight <= max(1, math.ceil(s.cwnd))
            self.checked += 1
        pkt.forward()


def tcp_path(bw=1e6, delay=0.01, qcap=1000, total=None, measure_from=0.0):
    sim = Simulator()
    stats = FlowStats(1, "tcp_bulk")
    fwd = Link(sim, "fwd", bw, delay, DropTail(qcap))
    rev = Link(sim, "rev", bw, delay, DropTail(qcap))
    holder = {}

    class ToSender:
        def receive(self, pkt):
            holder["s"].receive(pkt)

    sink = TcpSink(sim, 1, (rev, ToSender()), stats, total, measure_from)
    probe = WindowProbe()  # sits before the link so it sees packets as they leave
    s = TcpSender(sim, 1, (probe, fwd, sink), total_bytes=total, stats=stats)
    probe.sender = s
    holder["s"] = s
    return sim, s, sink, stats, probe


def test_lossless_path_has_no_timeouts_and_window_bound():
    sim, s, sink, stats, probe = tcp_path()
    s.start(0.0)
    sim.run_until(10.0)
    assert s.timeouts == 0 and stats.retransmits == 0
    assert probe.checked > 100
    # fills most of the 1 Mb/s pipe once past slow start
    assert stats.bytes_delivered * 8 / 10.0 > 0.9e6


def test_small_buffer_recovers_from_loss():
    sim, s, sink, stats, probe = tcp_path(qcap=8)
    s.start(0.0)
    sim.run_until(20.0)
    assert s.fast_retransmits > 0
    assert stats.bytes_delivered * 8 / 20.0 > 0.7e6
    assert sink.expected * 1000 == stats.bytes_delivered


def test_finite_transfer_completes():
    sim, s, sink, stats, probe = tcp_path(total=20480)
    s.start(1.0)
    sim.run_until(10.0)
    assert s.done and stats.bytes_delivered == 20480
    assert stats.finished_at is not None and stats.finished_at > 1.0


def test_tcp_determinism():
    def run():
        sim, s, sink, stats, _ = tcp_path(qcap=8)
        s.start(0.0)
        sim.run_until(5.0)
        return stats.bytes_delivered, stats.retransmits, s.cwnd
    assert run() == run()


def test_cbr_gap_and_schedule():
    sim = Simulator()
    out = Collector()
    src = UdpCbrSource(sim, 1, (out,), 1e6, 1000, start=0.5, stop=1.5)
    assert src.gap == pytest.approx(0.008)
    assert src.cbr_next(0.0) == 0.5
    assert src.cbr_next(0.5 + 0.008 * 3.2) == pytest.approx(0.5 + 0.008 * 4)
    src.begin()
    sim.run_until(2.0)
    assert len(out.pkts) == 125
    assert out.pkts[1].created == pytest.approx(0.508)


def test_cbr_rate_ratio():
    counts = []
    for rate in (4e6, 2e6):
        sim = Simulator()
        out = Collector()
        UdpCbrSource(sim, 1, (out,), rate, start=0.0, stop=10.0).begin()
        sim.run_until(10.0)
        counts.append(len(out.pkts))
    assert counts[0] == 2 * counts[1]


def test_cbr_rejects_bad_rate():
    with pytest.raises(ValueError):
        UdpCbrSource(Simulator(), 1, (), 0.0)


def test_udp_sink_counts_after_warmup():
    sim = Simulator()
    stats = FlowStats(1, "udp_cbr")
    sink = UdpSink(sim, stats, measure_from=1.0)
    UdpCbrSource(sim, 1, (sink,), 1e6, stop=2.0).begin()
    sim.run_until(3.0)
    assert stats.bytes_delivered == 250 * 1000
    assert stats.bytes_measured == 125 * 1000


def test_short_flow_generator():
    g = ShortFlowGenerator(random.Random(3), 0.5, start=2.0)
    times = g.session_times(1002.0)
    assert all(b > a for a, b in zip(times, times[1:]))
    assert times[0] > 2.0 and times[-1] < 1002.0
    assert len(times) == pytest.approx(2000, rel=0.1)
    assert ShortFlowGenerator(random.Random(3), math.inf).session_times(100.0) == []
    with pytest.raises(ValueError):
        ShortFlowGenerator(random.Random(3), 1.0, payload=0)
