"""Discrete-event engine and the domain types shared by every module.

Time is a float in seconds. Events fire in (time, insertion order), which
makes a run fully determined by its configuration and seed.
"""
from __future__ import annotations

import enum
import heapq
import zlib
from random import Random
from typing import Callable, Optional, TextIO

import numpy as np


class Mark(enum.Enum):
    IN = "IN"
    OUT = "OUT"
    BACKGROUND = "BACKGROUND"


class PacketKind(enum.Enum):
    TCP_DATA = "tcp_data"
    TCP_ACK = "tcp_ack"
    UDP = "udp"


class Packet:
    """A packet travelling along a fixed route of elements.

    ``route`` is a sequence of objects exposing ``receive(pkt)``; links,
    edge processing and endpoints all take part the same way.
    """

    __slots__ = ("flow", "size", "seq", "stamped_rate", "mark", "created",
                 "kind", "ack", "route", "hop")

    def __init__(self, flow: int, size: int, kind: PacketKind, created: float,
                 route=(), seq: int = -1, ack: int = -1):
        if size <= 0:
            raise ValueError("packet size must be positive, got %r" % (size,))
        self.flow = flow
        self.size = size
        self.kind = kind
        self.created = created
        self.seq = seq
        self.ack = ack
        self.stamped_rate: Optional[float] = None
        self.mark: Optional[Mark] = None
        self.route = route
        self.hop = 0

    def send(self):
        """Hand the packet to the first element of its route."""
        self.hop = 0
        self.route[0].receive(self)

    def forward(self):
        """Hand the packet to the next element of its route."""
        self.hop += 1
        self.route[self.hop].receive(self)

    def __repr__(self):
        return "Packet(flow=%d, seq=%d, kind=%s, size=%d, mark=%s)" % (
            self.flow, self.seq, self.kind.value, self.size,
            self.mark.value if self.mark else None)


def rng_stream(seed: int, name: str) -> Random:
    """Independent random stream for a named component.

    Streams are keyed by name, so adding a component never changes the
    draws seen by another.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode()),))
    state = ss.generate_state(4, dtype=np.uint32)
    return Random(int.from_bytes(state.tobytes(), "little"))


class SchedulingError(ValueError):
    pass


class Simulator:
    """Event queue plus the simulation clock."""

    def __init__(self, trace: Optional[TextIO] = None):
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self.events_processed = 0
        self._trace = trace

    def schedule(self, at: float, fn: Callable, *args) -> list:
        """Run ``fn(*args)`` at time ``at``; returns a cancellable handle."""
        if at < self.now:
            raise SchedulingError(
                "cannot schedule at t=%r, clock is already at %r" % (at, self.now))
        self._seq += 1
        entry = [at, self._seq, fn, args]
        heapq.heappush(self._heap, entry)
        return entry

    def schedule_in(self, delay: float, fn: Callable, *args) -> list:
        return self.schedule(self.now + delay, fn, *args)

    @staticmethod
    def cancel(handle: list):
        handle[2] = None

    def run_until(self, end: float) -> float:
        heap = self._heap
        pop = heapq.heappop
        n = 0
        while heap and heap[0][0] <= end:
            at, _, fn, args = pop(heap)
            if fn is None:
                continue
            self.now = at
            n += 1
            fn(*args)
        self.events_processed += n
        if end > self.now:
            self.now = end
        return self.now

    @property
    def pending(self) -> int:
        return sum(1 for e in self._heap if e[2] is not None)

    @property
    def tracing(self) -> bool:
        return self._trace is not None

    def trace(self, node: str, kind: str, pkt: Packet):
        if self._trace is not None:
            self._trace.write("%.9f %s %s %d %d\n" % (
                self.now, node, kind, pkt.flow, pkt.seq))


class Link:
    """Unidirectional link with an attached queue discipline.

    A packet dequeued at time t arrives at the next element at
    t + size*8/bandwidth + delay; departures are serialized, so arrivals keep
    FIFO order.
    """

    def __init__(self, sim: Simulator, name: str, bandwidth: float,
                 delay: float, queue):
        if bandwidth <= 0 or delay < 0:
            raise ValueError("link %s: bad bandwidth/delay" % name)
        self.sim = sim
        self.name = name
        self.bandwidth = bandwidth
        self.delay = delay
        self.queue = queue
        self.busy = False
        self.injected = 0
        self.delivered = 0
        self.dropped = 0
        self.on_drop: Optional[Callable[[Packet], None]] = None
        queue.attach(sim, self)

    def serialization(self, pkt: Packet) -> float:
        return pkt.size * 8.0 / self.bandwidth

    def transmit(self, pkt: Packet, now: float) -> float:
        """Start sending ``pkt`` at ``now``; returns its arrival time."""
        done = now + pkt.size * 8.0 / self.bandwidth
        arrival = done + self.delay
        self.sim.schedule(arrival, self._arrive, pkt)
        return arrival

    def receive(self, pkt: Packet):
        sim = self.sim
        self.injected += 1
        if not self.queue.enqueue(pkt, sim.now):
            self.dropped += 1
            if sim._trace is not None:
                sim.trace(self.name, "drop", pkt)
            if self.on_drop is not None:
                self.on_drop(pkt)
            return
        if sim._trace is not None:
            sim.trace(self.name, "enq", pkt)
        if not self.busy:
            self._start()

    def _start(self):
        sim = self.sim
        pkt = self.queue.dequeue(sim.now)
        if pkt is None:
            self.busy = False
            return
        self.busy = True
        self.transmit(pkt, sim.now)
        sim.schedule(sim.now + pkt.size * 8.0 / self.bandwidth, self._start)

    def _arrive(self, pkt: Packet):
        self.delivered += 1
        if self.sim._trace is not None:
            self.sim.trace(self.name, "arr", pkt)
        pkt.forward()

    @property
    def in_system(self) -> int:
        """Packets accepted but not yet delivered."""
        return self.injected - self.dropped - self.delivered
