"""Backend selection for the per-packet kernels.

The compiled extension is used when it was built and importable; set
``AQMARK_PURE_PYTHON=1`` to force the pure-Python implementation.
"""
import os

BACKEND = "python"

if os.environ.get("AQMARK_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import (
        FairRate, RateEstimator, RedAverage, TimeSlidingWindow, TokenBucket,
        pam_probability, red_drop_prob)
else:
    try:
        from ._kernels import (
            FairRate, RateEstimator, RedAverage, TimeSlidingWindow, TokenBucket,
            pam_probability, red_drop_prob)
        BACKEND = "compiled"
    except ImportError:
        from ._pykernels import (
            FairRate, RateEstimator, RedAverage, TimeSlidingWindow, TokenBucket,
            pam_probability, red_drop_prob)

__all__ = [
    "BACKEND", "FairRate", "RateEstimator", "RedAverage", "TimeSlidingWindow",
    "TokenBucket", "pam_probability", "red_drop_prob",
]
