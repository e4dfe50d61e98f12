"""Aggregate two-color markers.

All four share ``mark(pkt, now) -> Mark``:

* ``TokenBucketMarker``: IN while tokens last.
* ``PamMarker``: early probabilistic OUT marking driven by the averaged
  bucket level, then the token check.
* ``FsamMarker``: allocation probability min(1, alpha/r) from the rate
  stamped in the packet, then the token check.
* ``Tsw2cmMarker``: OUT with probability equal to the fraction of the
  time-sliding-window rate above the target.

Every marker that owns a bucket marks IN only after drawing tokens, so IN
volume never exceeds the profile.
"""
from __future__ import annotations

from dataclasses import dataclass
from random import Random

from .engine import Mark, Packet
from .kernels import FairRate, TimeSlidingWindow, TokenBucket
from .kernels import pam_probability as _pam_probability

MARKER_TYPES = ("tb", "pam", "fsam", "tsw2cm")


class MarkerConfigError(ValueError):
    """Raised when a marker receives traffic it cannot handle."""


@dataclass(frozen=True)
class PamParams:
    min_th: float
    max_th: float
    p_max: float = 1.0
    p_min: float = 0.0

    def __post_init__(self):
        if not 0 <= self.min_th < self.max_th:
            raise ValueError("need 0 <= min_th < max_th, got %r, %r" % (self.min_th, self.max_th))
        if not 0.0 <= self.p_min <= self.p_max <= 1.0:
            raise ValueError("need 0 <= p_min <= p_max <= 1")

    @classmethod
    def for_burst(cls, burst: float, min_frac=0.1, max_frac=0.9, p_max=1.0, p_min=0.0):
        return cls(min_frac * burst, max_frac * burst, p_max, p_min)

    def check_burst(self, burst: float):
        if self.max_th > burst:
            raise ValueError("max_th %r exceeds bucket burst %r" % (self.max_th, burst))


def pam_probability(x: float, params: PamParams) -> float:
    """Probability of marking OUT given the average bucket level ``x``."""
    return _pam_probability(x, params.min_th, params.max_th, params.p_max, params.p_min)


def tb_mark(bucket: TokenBucket, pkt: Packet, now: float) -> Mark:
    bucket.refill(now)
    return Mark.IN if bucket.try_consume(pkt.size) else Mark.OUT


def pam_mark(bucket: TokenBucket, params: PamParams, pkt: Packet, now: float,
             rng: Random, instantaneous: bool = False) -> Mark:
    bucket.refill(now)
    avg = bucket.update_avg()
    x = bucket.tokens if instantaneous else avg
    u = rng.random()
    if u < _pam_probability(x, params.min_th, params.max_th, params.p_max, params.p_min):
        return Mark.OUT
    return Mark.IN if bucket.try_consume(pkt.size) else Mark.OUT


def fsam_probability(alpha: float, stamped_rate: float) -> float:
    p = alpha / stamped_rate
    return p if p < 1.0 else 1.0


def fsam_mark(fr: FairRate, bucket: TokenBucket, pkt: Packet, now: float,
              rng: Random) -> Mark:
    rate = pkt.stamped_rate
    if rate is None or rate <= 0:
        raise MarkerConfigError(
            "flow %d reached the F-SAM marker without a rate stamp" % pkt.flow)
    alpha = fr.tick(now)
    bucket.refill(now)
    u = rng.random()
    allocated = u < fsam_probability(alpha, rate)
    fr.on_arrival(pkt.size * 8.0, rate, allocated, now)
    if allocated and bucket.try_consume(pkt.size):
        return Mark.IN
    return Mark.OUT


def tsw2cm_mark(state: TimeSlidingWindow, pkt: Packet, now: float, rng: Random) -> Mark:
    state.update(pkt.size * 8.0, now)
    u = rng.random()
    return Mark.OUT if u < state.out_probability() else Mark.IN


class TokenBucketMarker:
    name = "tb"

    def __init__(self, bucket: TokenBucket):
        self.bucket = bucket

    def mark(self, pkt: Packet, now: float) -> Mark:
        return tb_mark(self.bucket, pkt, now)


class PamMarker:
    name = "pam"

    def __init__(self, bucket: TokenBucket, params: PamParams, rng: Random,
                 instantaneous: bool = False):
        params.check_burst(bucket.burst)
        self.bucket = bucket
        self.params = params
        self.rng = rng
        self.instantaneous = instantaneous

    def mark(self, pkt: Packet, now: float) -> Mark:
        return pam_mark(self.bucket, self.params, pkt, now, self.rng, self.instantaneous)


class FsamMarker:
    name = "fsam"

    def __init__(self, fair_rate: FairRate, bucket: TokenBucket, rng: Random):
        self.fair_rate = fair_rate
        self.bucket = bucket
        self.rng = rng

    def mark(self, pkt: Packet, now: float) -> Mark:
        return fsam_mark(self.fair_rate, self.bucket, pkt, now, self.rng)


class Tsw2cmMarker:
    name = "tsw2cm"
    bucket = None

    def __init__(self, state: TimeSlidingWindow, rng: Random):
        self.state = state
        self.rng = rng

    def mark(self, pkt: Packet, now: float) -> Mark:
        return tsw2cm_mark(self.state, pkt, now, self.rng)
