import io

import pytest

from aqmark.aqm import DropTail
from aqmark.engine import Link, Packet, PacketKind, SchedulingError, Simulator, rng_stream


class Collector:
    def __init__(self, sim):
        self.sim = sim
        self.got = []

    def receive(self, pkt):
        self.got.append((self.sim.now, pkt.seq))


def test_schedule_at_zero_fires_first():
    sim = Simulator()
    log = []
    sim.schedule(0.5, log.append, "later")
    sim.schedule(0.0, log.append, "start")
    sim.run_until(1.0)
    assert log == ["start", "later"]


def test_ties_fire_in_insertion_order():
    sim = Simulator()
    log = []
    sim.schedule(1.0, log.append, "A")
    sim.schedule(1.0, log.append, "B")
    sim.run_until(2.0)
    assert log == ["A", "B"]


def test_cancelled_event_never_fires():
    sim = Simulator()
    log = []
    h = sim.schedule(0.5, log.append, "X")
    sim.cancel(h)
    sim.run_until(1.0)
    assert log == []


def test_scheduling_in_the_past_is_rejected():
    sim = Simulator()
    sim.run_until(2.0)
    with pytest.raises(SchedulingError, match="already at"):
        sim.schedule(1.0, print)


def test_run_until_empty_queue():
    sim = Simulator()
    assert sim.run_until(40.0) == 40.0
    assert sim.events_processed == 0


def test_events_after_end_are_not_processed():
    sim = Simulator()
    log = []
    sim.schedule(50.0, log.append, 1)
    sim.run_until(40.0)
    assert log == [] and sim.pending == 1


def test_clock_is_monotone():
    sim = Simulator()
    seen = []
    for t in [3.0, 1.0, 2.0, 1.0, 0.5]:
        sim.schedule(t, lambda: seen.append(sim.now))
    sim.run_until(10)
    assert seen == sorted(seen)


def _link(sim, bw, delay):
    sink = Collector(sim)
    link = Link(sim, "l", bw, delay, DropTail(10))
    return link, sink


def test_transmit_time():
    # 1250 B at 10 Mb/s: 1250*8/1e7 = 1 ms serialization, + 5 ms propagation
    sim = Simulator()
    link, sink = _link(sim, 10e6, 0.005)
    pkt = Packet(1, 1250, PacketKind.UDP, 0.0, (link, sink))
    assert link.transmit(pkt, 0.0) == pytest.approx(0.006, abs=1e-12)


def test_zero_delay_link_is_serialization_only():
    sim = Simulator()
    link, sink = _link(sim, 10e6, 0.0)
    pkt = Packet(1, 1250, PacketKind.UDP, 0.0, (link, sink))
    assert link.transmit(pkt, 0.0) == pytest.approx(0.001, abs=1e-12)


def test_back_to_back_packets_keep_fifo_order():
    sim = Simulator()
    link, sink = _link(sim, 10e6, 0.005)
    for seq in range(5):
        Packet(1, 1250, PacketKind.UDP, 0.0, (link, sink), seq=seq).send()
    sim.run_until(1.0)
    times = [t for t, _ in sink.got]
    assert [s for _, s in sink.got] == list(range(5))
    assert times == sorted(times)
    assert times[0] == pytest.approx(0.006) and times[-1] == pytest.approx(0.010)


def test_link_conservation():
    sim = Simulator()
    link, sink = _link(sim, 1e6, 0.001)
    for seq in range(25):  # queue holds 10, one in service
        Packet(1, 1000, PacketKind.UDP, 0.0, (link, sink), seq=seq).send()
    sim.run_until(10.0)
    assert link.injected == link.delivered + link.dropped
    assert link.dropped == 14 and len(sink.got) == 11


def test_packet_size_must_be_positive():
    with pytest.raises(ValueError):
        Packet(1, 0, PacketKind.UDP, 0.0)


def test_rng_streams_are_keyed_by_name():
    a1 = [rng_stream(7, "a").random() for _ in range(3)]
    a2 = [rng_stream(7, "a").random() for _ in range(3)]
    b = rng_stream(7, "b").random()
    assert a1 == a2
    assert b != a1[0]
    assert rng_stream(8, "a").random() != a1[0]


def test_trace_lines():
    buf = io.StringIO()
    sim = Simulator(trace=buf)
    link, sink = _link(sim, 10e6, 0.0)
    Packet(3, 1250, PacketKind.UDP, 0.0, (link, sink), seq=9).send()
    sim.run_until(1.0)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "0.000000000 l enq 3 9"
    assert lines[1].split()[1:] == ["l", "arr", "3", "9"]
