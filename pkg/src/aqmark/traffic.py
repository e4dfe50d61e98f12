"""Traffic sources and sinks.

TCP is a packet-level Reno: slow start, congestion avoidance, fast
retransmit / fast recovery, and a Jacobson/Karels retransmission timer.
Sequence numbers count segments. There are no delayed ACKs and no SACK; the
receiver window is unbounded.
"""
from __future__ import annotations

import math
from random import Random
from typing import Callable, List, Optional

from .engine import Packet, PacketKind, Simulator

ACK_SIZE = 40
DEFAULT_MSS = 1000
RTO_INIT = 1.0
RTO_MIN = 0.2
RTO_MAX = 64.0

SLOW_START = "slow_start"
CONG_AVOID = "congestion_avoidance"


class TcpSender:
    """Reno sender for a bulk flow (``total_bytes=None``) or a finite transfer.

    ``route`` is the forward path starting at the first link and ending at the
    receiver. ``stats`` is any object with ``pkts_sent``, ``bytes_sent`` and
    ``retransmits`` counters.
    """

    def __init__(self, sim: Simulator, flow: int, route, mss: int = DEFAULT_MSS,
                 total_bytes: Optional[int] = None, stats=None,
                 on_done: Optional[Callable[["TcpSender"], None]] = None,
                 rto_init: float = RTO_INIT, rto_min: float = RTO_MIN,
                 rto_max: float = RTO_MAX):
        self.sim = sim
        self.flow = flow
        self.route = tuple(route)
        self.mss = mss
        self.total_bytes = total_bytes
        self.nseg = None if total_bytes is None else max(1, math.ceil(total_bytes / mss))
        self.stats = stats
        self.on_done = on_done

        self.cwnd = 1.0
        self.ssthresh = 1e9
        self.next_seq = 0
        self.highest_acked = 0  # lowest unacknowledged segment
        self.dup_acks = 0
        self.in_recovery = False
        self.recover = -1
        self.srtt: Optional[float] = None
        self.rttvar = 0.0
        self.rto = rto_init
        self.rto_min = rto_min
        self.rto_max = rto_max

        self._sent_at: dict = {}
        self._retransmitted: set = set()
        self._deadline: Optional[float] = None
        self._timer = None
        self.timeouts = 0
        self.fast_retransmits = 0
        self.started_at: Optional[float] = None
        self.done = False

    @property
    def phase(self) -> str:
        return SLOW_START if self.cwnd < self.ssthresh else CONG_AVOID

    @property
    def in_flight(self) -> int:
        return self.next_seq - self.highest_acked

    def segment_size(self, seq: int) -> int:
        if self.nseg is not None and seq == self.nseg - 1:
            rest = self.total_bytes - seq * self.mss
            return rest if rest > 0 else self.mss
        return self.mss

    def start(self, at: Optional[float] = None):
        self.sim.schedule(self.sim.now if at is None else at, self._begin)

    def _begin(self):
        self.started_at = self.sim.now
        self._send_more()

    # transmission

    def _transmit(self, seq: int):
        sim = self.sim
        size = self.segment_size(seq)
        pkt = Packet(self.flow, size, PacketKind.TCP_DATA, sim.now, self.route, seq=seq)
        if seq in self._sent_at:
            self._retransmitted.add(seq)
            if self.stats is not None:
                self.stats.retransmits += 1
        else:
            self._sent_at[seq] = sim.now
        if self.stats is not None:
            self.stats.pkts_sent += 1
            self.stats.bytes_sent += size
        pkt.send()

    def _send_more(self):
        limit = self.highest_acked + max(1, int(self.cwnd))
        if self.nseg is not None and limit > self.nseg:
            limit = self.nseg
        while self.next_seq < limit:
            seq = self.next_seq
            self.next_seq += 1
            self._transmit(seq)
        if self.next_seq > self.highest_acked and self._deadline is None:
            self._arm()

    # retransmission timer: one pending event, pushed back lazily

    def _arm(self):
        self._deadline = self.sim.now + self.rto
        if self._timer is None:
            self._timer = self.sim.schedule(self._deadline, self._on_timer)

    def _disarm(self):
        self._deadline = None

    def _on_timer(self):
        self._timer = None
        if self._deadline is None or self.done:
            return
        if self.sim.now < self._deadline:
            self._timer = self.sim.schedule(self._deadline, self._on_timer)
            return
        self._deadline = None
        self.on_timeout(self.sim.now)

    def _rtt_sample(self, r: float):
        if self.srtt is None:
            self.srtt = r
            self.rttvar = r / 2.0
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - r)
            self.srtt = 0.875 * self.srtt + 0.125 * r
        self.rto = min(max(self.srtt + 4.0 * self.rttvar, self.rto_min), self.rto_max)

    # ack processing

    def receive(self, pkt: Packet):
        self.on_ack(pkt.ack, self.sim.now)

    def on_ack(self, ack: int, now: float):
        if self.done:
            return
        if ack > self.highest_acked:
            last = ack - 1
            sent = self._sent_at.get(last)
            if sent is not None and last not in self._retransmitted:
                self._rtt_sample(now - sent)
            for s in range(self.highest_acked, ack):
                self._sent_at.pop(s, None)
                self._retransmitted.discard(s)
            self.highest_acked = ack
            if self.next_seq < ack:
                self.next_seq = ack
            if self.in_recovery:
                self.cwnd = self.ssthresh
                self.in_recovery = False
            elif self.cwnd < self.ssthresh:
                self.cwnd += 1.0
            else:
                self.cwnd += 1.0 / self.cwnd
            self.dup_acks = 0
            if self.nseg is not None and ack >= self.nseg:
                self._finish()
                return
            self._disarm()
            self._send_more()
        elif ack == self.highest_acked and self.next_seq > self.highest_acked:
            self.dup_acks += 1
            if self.dup_acks == 3 and not self.in_recovery:
                if self.highest_acked > self.recover:
                    self.ssthresh = max(self.cwnd / 2.0, 2.0)
                    self.cwnd = self.ssthresh + 3.0
                    self.in_recovery = True
                    self.recover = self.next_seq - 1
                    self.fast_retransmits += 1
                    self._transmit(self.highest_acked)
                    self._disarm()
                    self._arm()
            elif self.in_recovery and self.dup_acks > 3:
                self.cwnd += 1.0
                self._send_more()

    def on_timeout(self, now: float):
        self.timeouts += 1
        self.ssthresh = max(self.cwnd / 2.0, 2.0)
        self.cwnd = 1.0
        self.rto = min(self.rto * 2.0, self.rto_max)
        self.dup_acks = 0
        self.in_recovery = False
        self.recover = self.next_seq - 1
        self.next_seq = self.highest_acked
        self._send_more()

    def _finish(self):
        self.done = True
        self._disarm()
        if self.on_done is not None:
            self.on_done(self)


class TcpSink:
    """Cumulative-ACK receiver; delivers in-order payload to ``stats``."""

    def __init__(self, sim: Simulator, flow: int, reverse_route, stats=None,
                 total_bytes: Optional[int] = None, measure_from: float = 0.0):
        self.sim = sim
        self.flow = flow
        self.reverse_route = tuple(reverse_route)
        self.stats = stats
        self.total_bytes = total_bytes
        self.measure_from = measure_from
        self.expected = 0
        self.delivered = 0
        self._ooo: dict = {}

    def _deliver(self, size: int):
        self.delivered += size
        st = self.stats
        if st is not None:
            now = self.sim.now
            st.bytes_delivered += size
            if now >= self.measure_from:
                st.bytes_measured += size
            if self.total_bytes is not None and self.delivered >= self.total_bytes:
                st.finished_at = now

    def receive(self, pkt: Packet):
        seq = pkt.seq
        if seq == self.expected:
            self.expected += 1
            self._deliver(pkt.size)
            ooo = self._ooo
            while self.expected in ooo:
                self._deliver(ooo.pop(self.expected))
                self.expected += 1
        elif seq > self.expected:
            self._ooo[seq] = pkt.size
        ack = Packet(self.flow, ACK_SIZE, PacketKind.TCP_ACK, self.sim.now,
                     self.reverse_route, seq=seq, ack=self.expected)
        ack.send()


class UdpCbrSource:
    """Constant bit rate: emissions at start + n * pkt_size*8/rate, n = 0, 1, ..."""

    def __init__(self, sim: Simulator, flow: int, route, rate: float,
                 pkt_size: int = 1000, start: float = 0.0, stop: float = math.inf,
                 stats=None):
        if rate <= 0 or pkt_size <= 0:
            raise ValueError("CBR rate and packet size must be positive")
        self.sim = sim
        self.flow = flow
        self.route = tuple(route)
        self.rate = rate
        self.pkt_size = pkt_size
        self.start = start
        self.stop = stop
        self.stats = stats
        self.gap = pkt_size * 8.0 / rate
        self.sent = 0

    def cbr_next(self, now: float) -> float:
        """Time of the first emission at or after ``now``."""
        if now <= self.start:
            return self.start
        n = math.ceil((now - self.start) / self.gap - 1e-9)
        return self.start + n * self.gap

    def begin(self):
        if self.start < self.stop:
            self.sim.schedule(self.start, self._emit)

    def _emit(self):
        sim = self.sim
        pkt = Packet(self.flow, self.pkt_size, PacketKind.UDP, sim.now, self.route,
                     seq=self.sent)
        self.sent += 1
        if self.stats is not None:
            self.stats.pkts_sent += 1
            self.stats.bytes_sent += self.pkt_size
        pkt.send()
        nxt = self.start + self.sent * self.gap
        if nxt < self.stop:
            sim.schedule(nxt, self._emit)


class UdpSink:
    def __init__(self, sim: Simulator, stats=None, measure_from: float = 0.0):
        self.sim = sim
        self.stats = stats
        self.measure_from = measure_from
        self.received = 0

    def receive(self, pkt: Packet):
        self.received += 1
        st = self.stats
        if st is not None:
            st.bytes_delivered += pkt.size
            if self.sim.now >= self.measure_from:
                st.bytes_measured += pkt.size


class ShortFlowGenerator:
    """Poisson arrivals of fixed-size TCP transfers."""

    def __init__(self, rng: Random, mean_interarrival: float, payload: int = 20480,
                 start: float = 0.0):
        if mean_interarrival <= 0 or payload <= 0:
            raise ValueError("mean interarrival and payload must be positive")
        self.rng = rng
        self.mean_interarrival = mean_interarrival
        self.payload = payload
        self.start = start

    def session_times(self, until: float) -> List[float]:
        if math.isinf(self.mean_interarrival):
            return []
        rate = 1.0 / self.mean_interarrival
        times = []
        t = self.start + self.rng.expovariate(rate)
        while t < until:
            times.append(t)
            t += self.rng.expovariate(rate)
        return times


def spawn_short_flows(g: ShortFlowGenerator, until: float) -> List[float]:
    return g.session_times(until)
