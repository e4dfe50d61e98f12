"""Per-flow accounting, throughput and the Jain fairness index."""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

KIND_GROUPS = {
    "tcp_bulk": "bulk_tcp",
    "tcp_short": "short_tcp",
    "udp_cbr": "udp",
    "background": "background",
}
GROUP_ORDER = ("bulk_tcp", "short_tcp", "udp", "background", "all")


@dataclass(slots=True)
class FlowStats:
    flow: int
    kind: str
    pkts_in: int = 0
    pkts_out: int = 0
    bytes_marked_in: int = 0
    bytes_marked_out: int = 0
    bytes_delivered: int = 0
    bytes_measured: int = 0  # delivered inside the post-warm-up window
    drops_core: int = 0
    pkts_sent: int = 0
    bytes_sent: int = 0
    retransmits: int = 0
    started_at: Optional[float] = None
    finished_at: Optional[float] = None
    # rate stamps versus the actual arrival pattern at the ingress
    stamp_sum: float = 0.0
    stamp_count: int = 0
    ingress_first: Optional[float] = None
    ingress_last: Optional[float] = None
    ingress_bits_after_first: float = 0.0

    @property
    def pkts_marked(self) -> int:
        return self.pkts_in + self.pkts_out

    @property
    def mean_stamped_rate(self) -> float:
        return self.stamp_sum / self.stamp_count if self.stamp_count else 0.0

    @property
    def ingress_rate(self) -> float:
        """Bits/second of the packet train seen at the ingress."""
        if self.ingress_first is None or self.ingress_last is None:
            return 0.0
        span = self.ingress_last - self.ingress_first
        return self.ingress_bits_after_first / span if span > 0 else 0.0


def throughput(fs: FlowStats, window: float) -> float:
    """Delivered bits/second over the measurement window."""
    if window <= 0:
        raise ValueError("window must be positive")
    return fs.bytes_measured * 8.0 / window


def session_throughput(fs: FlowStats, end: float) -> float:
    """Transfer rate of a finite flow: delivered bits over its lifetime.

    Unfinished transfers are measured up to ``end``.
    """
    if fs.started_at is None:
        return 0.0
    stop = fs.finished_at if fs.finished_at is not None else end
    life = stop - fs.started_at
    return fs.bytes_delivered * 8.0 / life if life > 0 else 0.0


def flow_throughput(fs: FlowStats, window: float, end: float) -> float:
    if fs.kind == "tcp_short":
        return session_throughput(fs, end)
    return throughput(fs, window)


def fairness_index(x: Sequence[float]) -> float:
    """(sum x)^2 / (N * sum x^2); 1 for equal shares, 1/N for one winner."""
    vals = [float(v) for v in x]
    if not vals:
        raise ValueError("fairness index of an empty list")
    if any(v < 0 for v in vals):
        raise ValueError("fairness index needs non-negative values")
    top = max(vals)
    if top == 0:
        raise ValueError("fairness index undefined for all-zero input")
    vals = [v / top for v in vals]  # scale first so tiny inputs do not underflow
    sq = sum(v * v for v in vals)
    s = sum(vals)
    return s * s / (len(vals) * sq)


def _fi_or_nan(x: Sequence[float]) -> float:
    try:
        return fairness_index(x)
    except ValueError:
        return math.nan


@dataclass
class SummaryRow:
    group: str
    n_flows: int
    mean_bps: float
    stddev_bps: float
    fi_throughput: float
    fi_in_tokens: float
    total_in: int = 0
    total_out: int = 0
    throughputs: List[float] = field(default_factory=list, repr=False)


def group_of(fs: FlowStats) -> str:
    return KIND_GROUPS.get(fs.kind, fs.kind)


def summarize(stats: Iterable[FlowStats], window: float, end: float) -> List[SummaryRow]:
    """One row per flow class present, plus ``all`` (every non-background flow)."""
    groups: Dict[str, List[FlowStats]] = {}
    for fs in stats:
        g = group_of(fs)
        groups.setdefault(g, []).append(fs)
        if g != "background":
            groups.setdefault("all", []).append(fs)
    rows = []
    for g in GROUP_ORDER:
        members = groups.get(g)
        if not members:
            continue
        tput = [flow_throughput(fs, window, end) for fs in members]
        rows.append(SummaryRow(
            group=g,
            n_flows=len(members),
            mean_bps=statistics.fmean(tput),
            stddev_bps=statistics.pstdev(tput) if len(tput) > 1 else 0.0,
            fi_throughput=_fi_or_nan(tput),
            fi_in_tokens=_fi_or_nan([fs.pkts_in for fs in members]),
            total_in=sum(fs.pkts_in for fs in members),
            total_out=sum(fs.pkts_out for fs in members),
            throughputs=tput,
        ))
    return rows
