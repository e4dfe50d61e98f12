"""Queue disciplines: DropTail, RED and RIO (RED with In/Out).

Queue lengths are in packets. RIO drives the IN curve with the average
number of queued IN packets and the OUT curve with the average total
occupancy; packets marked BACKGROUND are treated as OUT.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from random import Random
from typing import Optional

from .engine import Mark, Packet
from .kernels import RedAverage
from .kernels import red_drop_prob as _red_drop_prob

DEFAULT_MEAN_PKT_SIZE = 1000


@dataclass(frozen=True)
class RedParams:
    min_th: float
    max_th: float
    max_p: float

    def __post_init__(self):
        if not 0 <= self.min_th < self.max_th:
            raise ValueError("RED needs 0 <= min_th < max_th")
        if not 0.0 < self.max_p <= 1.0:
            raise ValueError("RED needs 0 < max_p <= 1")


RIO_IN_DEFAULT = RedParams(40, 70, 0.02)
RIO_OUT_DEFAULT = RedParams(10, 30, 0.5)


def red_drop_prob(avg: float, params: RedParams) -> float:
    return _red_drop_prob(avg, params.min_th, params.max_th, params.max_p)


class DropTail:
    """FIFO that accepts iff occupancy < capacity."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.buffer: deque = deque()
        self.drops = 0

    def attach(self, sim, link):
        pass

    def enqueue(self, pkt: Packet, now: float) -> bool:
        if len(self.buffer) >= self.capacity:
            self.drops += 1
            return False
        self.buffer.append(pkt)
        return True

    def dequeue(self, now: float) -> Optional[Packet]:
        return self.buffer.popleft() if self.buffer else None

    def __len__(self):
        return len(self.buffer)


class RioQueue:
    """Finite FIFO with separate RED drop curves for IN and OUT packets.

    With ``out_params`` also used for IN packets (see :class:`RedQueue`) this
    reduces to plain RED on the total average.
    """

    def __init__(self, capacity: int, in_params: RedParams = RIO_IN_DEFAULT,
                 out_params: RedParams = RIO_OUT_DEFAULT, ewma_weight: float = 0.002,
                 rng: Optional[Random] = None, mean_pkt_size: int = DEFAULT_MEAN_PKT_SIZE):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        for p in (in_params, out_params):
            if p.max_th > capacity:
                raise ValueError("RED max_th %r exceeds capacity %r" % (p.max_th, capacity))
        self.capacity = capacity
        self.in_params = in_params
        self.out_params = out_params
        self.ewma_weight = ewma_weight
        self.rng = rng if rng is not None else Random(0)
        self.mean_pkt_size = mean_pkt_size
        self.buffer: deque = deque()
        self.q_in = 0
        self.avg = RedAverage(ewma_weight, 1e-3)
        self.arrivals = {Mark.IN: 0, Mark.OUT: 0}
        self.early_drops = {Mark.IN: 0, Mark.OUT: 0}
        self.overflow_drops = {Mark.IN: 0, Mark.OUT: 0}

    def attach(self, sim, link):
        self.avg.pkt_time = self.mean_pkt_size * 8.0 / link.bandwidth

    @property
    def avg_in(self) -> float:
        return self.avg.avg_in

    @property
    def avg_total(self) -> float:
        return self.avg.avg_total

    def drop_probability(self, mark: Mark) -> float:
        if mark is Mark.IN:
            return red_drop_prob(self.avg.avg_in, self.in_params)
        return red_drop_prob(self.avg.avg_total, self.out_params)

    def enqueue(self, pkt: Packet, now: float) -> bool:
        is_in = pkt.mark is Mark.IN
        color = Mark.IN if is_in else Mark.OUT
        avg = self.avg
        avg.arrive(len(self.buffer), self.q_in, now)
        self.arrivals[color] += 1
        if is_in:
            p = self.in_params
            prob = _red_drop_prob(avg.avg_in, p.min_th, p.max_th, p.max_p)
        else:
            p = self.out_params
            prob = _red_drop_prob(avg.avg_total, p.min_th, p.max_th, p.max_p)
        if prob > 0.0 and (prob >= 1.0 or self.rng.random() < prob):
            self.early_drops[color] += 1
            return False
        if len(self.buffer) >= self.capacity:
            self.overflow_drops[color] += 1
            return False
        self.buffer.append(pkt)
        if is_in:
            self.q_in += 1
        return True

    def dequeue(self, now: float) -> Optional[Packet]:
        if not self.buffer:
            return None
        pkt = self.buffer.popleft()
        if pkt.mark is Mark.IN:
            self.q_in -= 1
        if not self.buffer:
            self.avg.go_idle(now)
        return pkt

    def __len__(self):
        return len(self.buffer)

    @property
    def drops(self) -> int:
        return sum(self.early_drops.values()) + sum(self.overflow_drops.values())


class RedQueue(RioQueue):
    """Single-curve RED: every packet is tested against the total average."""

    def __init__(self, capacity: int, params: RedParams, ewma_weight: float = 0.002,
                 rng: Optional[Random] = None, mean_pkt_size: int = DEFAULT_MEAN_PKT_SIZE):
        super().__init__(capacity, params, params, ewma_weight, rng, mean_pkt_size)

    def drop_probability(self, mark: Mark) -> float:
        return red_drop_prob(self.avg.avg_total, self.out_params)

    def enqueue(self, pkt: Packet, now: float) -> bool:
        color = Mark.IN if pkt.mark is Mark.IN else Mark.OUT
        avg = self.avg
        avg.arrive(len(self.buffer), self.q_in, now)
        self.arrivals[color] += 1
        prob = red_drop_prob(avg.avg_total, self.out_params)
        if prob > 0.0 and (prob >= 1.0 or self.rng.random() < prob):
            self.early_drops[color] += 1
            return False
        if len(self.buffer) >= self.capacity:
            self.overflow_drops[color] += 1
            return False
        self.buffer.append(pkt)
        if color is Mark.IN:
            self.q_in += 1
        return True
