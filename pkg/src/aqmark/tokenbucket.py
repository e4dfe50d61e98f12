"""Token bucket traffic profile.

Tokens are counted in bytes and rates in bits/second; every conversion
between the two goes through the helpers here.  The bucket itself lives in
the kernel backend (see :mod:`aqmark.kernels`):

    refill(now)        tokens = min(burst, tokens + cir*dt/8), lazy
    try_consume(size)  all-or-nothing, no token debt
    update_avg()       avg = (1 - w)*avg + w*tokens, once per marker arrival
"""
from .kernels import TokenBucket

TokenBucketState = TokenBucket

DEFAULT_EWMA_WEIGHT = 0.002


def bits_to_bytes(bits: float) -> float:
    return bits / 8.0


def bytes_to_bits(nbytes: float) -> float:
    return nbytes * 8.0


def kbit_to_bytes(kbit: float) -> float:
    """Burst sizes quoted in kilobits, e.g. 100 kb -> 12500 bytes."""
    return kbit * 1000.0 / 8.0


def make_bucket(cir_bps: float, burst_bytes: float,
                ewma_weight: float = DEFAULT_EWMA_WEIGHT, now: float = 0.0) -> TokenBucket:
    """A full bucket, average initialised to the full level."""
    return TokenBucket(cir_bps, burst_bytes, ewma_weight, -1.0, now)


__all__ = ["TokenBucket", "TokenBucketState", "DEFAULT_EWMA_WEIGHT",
           "bits_to_bytes", "bytes_to_bits", "kbit_to_bytes", "make_bucket"]
