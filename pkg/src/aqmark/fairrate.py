"""Rate machinery for the fair stateless marker.

Per-flow rates are estimated where the flow enters the domain and carried in
the packet; the marker keeps only aggregate state: the arrival rate, the
rate of packets that pass the allocation test, and the fair share alpha.
"""
from __future__ import annotations

from typing import Sequence

from .engine import Packet
from .kernels import FairRate, RateEstimator

FlowRateEstimator = RateEstimator
FairRateState = FairRate

DEFAULT_K_EST = 0.1
DEFAULT_K_C = 0.2
DEFAULT_CLAMP = 2.0


def stamp_rate(est: RateEstimator, pkt: Packet, now: float) -> float:
    """Update the flow's rate estimate with ``pkt`` and write it into the header."""
    rate = est.update(pkt.size * 8.0, now)
    pkt.stamped_rate = rate
    return rate


def on_arrival(fr: FairRate, pkt: Packet, allocated: bool, now: float) -> FairRate:
    fr.on_arrival(pkt.size * 8.0, pkt.stamped_rate, allocated, now)
    return fr


def update_alpha(fr: FairRate, now: float) -> float:
    return fr.update_alpha(now)


def waterfill_oracle(rates: Sequence[float], capacity: float) -> float:
    """Max-min fair share: the alpha with sum(min(r, alpha)) == capacity.

    Returns max(rates) when the demand fits.
    """
    if not rates:
        raise ValueError("rates must be non-empty")
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    ordered = sorted(float(r) for r in rates)
    if sum(ordered) <= capacity:
        return ordered[-1]
    remaining = float(capacity)
    n = len(ordered)
    for i, r in enumerate(ordered):
        share = remaining / (n - i)
        if r >= share:
            return share
        remaining -= r
    return ordered[-1]  # unreachable when sum > capacity


__all__ = ["FlowRateEstimator", "FairRateState", "FairRate", "RateEstimator",
           "stamp_rate", "on_arrival", "update_alpha", "waterfill_oracle",
           "DEFAULT_K_EST", "DEFAULT_K_C", "DEFAULT_CLAMP"]
