"""Dumbbell scenario: build, run, replicate, sweep, write CSV.

    s1 ┐                                   ┌ d1
    s2 ┼── e1 [marker] ── c [RIO] ── e2 ───┤
    s3 ┘                                   └ d2

Rates are stamped and packets marked as they arrive at e1 from the access
links. The core queue sits on the c -> e2 bottleneck. ACKs return over
DropTail links.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO

from . import kernels
from .aqm import DropTail, RedParams, RedQueue, RioQueue
from .config import HOSTS, SINKS, QueueCfg, ScenarioConfig, resolve_param, set_param
from .engine import Link, Mark, Packet, Simulator, rng_stream
from .fairrate import FairRate, RateEstimator
from .markers import (FsamMarker, PamMarker, PamParams, TokenBucketMarker, Tsw2cmMarker)
from .metrics import FlowStats, flow_throughput, summarize
from .tokenbucket import make_bucket
from .traffic import ShortFlowGenerator, TcpSender, TcpSink, UdpCbrSource, UdpSink

FLOW_FIELDS = ["scenario", "marker", "replication", "flow_id", "flow_kind",
               "pkts_in", "pkts_out", "bytes_delivered", "throughput_bps"]
SUMMARY_FIELDS = ["scenario", "marker", "replication", "group", "n_flows", "mean_bps",
                  "stddev_bps", "fi_throughput", "fi_in_tokens"]


def make_marker(cfg: ScenarioConfig, seed: int, kind: Optional[str] = None):
    m = cfg.marker
    kind = kind or m.type
    rng = rng_stream(seed, "marker")
    if kind == "tsw2cm":
        return Tsw2cmMarker(kernels.TimeSlidingWindow(m.cir_bps, m.tsw2cm.win_length_s), rng)
    bucket = make_bucket(m.cir_bps, m.burst_bytes, m.ewma_weight)
    if kind == "tb":
        return TokenBucketMarker(bucket)
    if kind == "pam":
        p = m.pam
        params = PamParams.for_burst(m.burst_bytes, p.min_th_frac, p.max_th_frac, p.p_max, p.p_min)
        return PamMarker(bucket, params, rng, p.instantaneous)
    if kind == "fsam":
        f = m.fsam
        fr = FairRate(m.cir_bps, f.k_est_seconds, f.k_c_seconds, f.alpha_clamp_factor)
        return FsamMarker(fr, bucket, rng)
    raise ValueError("unknown marker %r" % kind)


def make_queue(qc: QueueCfg, rng):
    if qc.discipline == "droptail":
        return DropTail(qc.capacity)
    if qc.discipline == "red":
        r = qc.red
        return RedQueue(qc.capacity, RedParams(r.min_th, r.max_th, r.max_p), qc.ewma_weight, rng)
    i, o = qc.rio_in, qc.rio_out
    return RioQueue(qc.capacity, RedParams(i.min_th, i.max_th, i.max_p),
                    RedParams(o.min_th, o.max_th, o.max_p), qc.ewma_weight, rng)


class EdgeIngress:
    """Edge node e1: per-flow rate stamping, then the aggregate marker."""

    name = "e1"

    def __init__(self, sim: Simulator, marker, stats: Dict[int, FlowStats], k_est: float):
        self.sim = sim
        self.marker = marker
        self.stats = stats
        self.k_est = k_est
        self.estimators: Dict[int, RateEstimator] = {}
        self.background: set = set()

    def receive(self, pkt: Packet):
        now = self.sim.now
        est = self.estimators.get(pkt.flow)
        if est is None:
            est = self.estimators[pkt.flow] = RateEstimator(self.k_est)
        bits = pkt.size * 8.0
        rate = est.update(bits, now)
        pkt.stamped_rate = rate
        fs = self.stats[pkt.flow]
        fs.stamp_sum += rate
        fs.stamp_count += 1
        if fs.ingress_first is None:
            fs.ingress_first = now
        else:
            fs.ingress_bits_after_first += bits
        fs.ingress_last = now
        if pkt.flow in self.background:
            pkt.mark = Mark.BACKGROUND
        else:
            mark = self.marker.mark(pkt, now)
            pkt.mark = mark
            if mark is Mark.IN:
                fs.pkts_in += 1
                fs.bytes_marked_in += pkt.size
            else:
                fs.pkts_out += 1
                fs.bytes_marked_out += pkt.size
            if self.sim._trace is not None:
                self.sim.trace(self.name, "mark_" + mark.value, pkt)
        pkt.forward()


@dataclass
class RunResult:
    scenario: str
    marker: str
    replication: int
    seed: int
    duration: float
    window: float
    stats: List[FlowStats]
    events: int = 0
    core_drops: Dict[str, int] = field(default_factory=dict)
    core_arrivals: Dict[str, int] = field(default_factory=dict)
    alpha: Optional[float] = None

    def throughput(self, fs: FlowStats) -> float:
        return flow_throughput(fs, self.window, self.duration)

    def summary(self):
        return summarize(self.stats, self.window, self.duration)

    def by_kind(self, kind: str) -> List[FlowStats]:
        return [fs for fs in self.stats if fs.kind == kind]


class Scenario:
    """A built, runnable dumbbell instance."""

    def __init__(self, cfg: ScenarioConfig, marker: Optional[str] = None,
                 replication: int = 0, trace: Optional[TextIO] = None):
        self.cfg = cfg
        self.marker_type = marker or cfg.marker.type
        self.replication = replication
        self.seed = cfg.seed + replication
        self.sim = sim = Simulator(trace)
        self.stats: Dict[int, FlowStats] = {}
        self.senders: list = []
        self._next_flow = 1

        topo = cfg.topology
        links = topo.links
        edge_q = topo.edge_queue

        def link(name, lc, qc=edge_q, rng_name=None):
            q = make_queue(qc, rng_stream(self.seed, rng_name or ("queue:" + name)))
            return Link(sim, name, lc.bandwidth_bps, lc.delay_s, q)

        self.access = {h: link(h + "->e1", links.access) for h in HOSTS}
        self.core_link = link("e1->c", links.core)
        self.bottleneck = link("c->e2", links.bottleneck, topo.core_queue, "queue:core")
        self.egress = {d: link("e2->" + d, links.egress) for d in SINKS}
        self.rev_egress = {d: link(d + "->e2", links.egress) for d in SINKS}
        self.rev_bottleneck = link("e2->c", links.bottleneck)
        self.rev_core = link("c->e1", links.core)
        self.rev_access = {h: link("e1->" + h, links.access) for h in HOSTS}
        self.bottleneck.on_drop = self._core_drop

        self.marker = make_marker(cfg, self.seed, self.marker_type)
        self.ingress = EdgeIngress(sim, self.marker, self.stats, cfg.marker.fsam.k_est_seconds)
        self._build_sources()

    # wiring helpers

    def _forward(self, host, sink, endpoint):
        return (self.access[host], self.ingress, self.core_link, self.bottleneck,
                self.egress[sink], endpoint)

    def _reverse(self, host, sink, endpoint):
        return (self.rev_egress[sink], self.rev_bottleneck, self.rev_core,
                self.rev_access[host], endpoint)

    def _new_flow(self, kind: str) -> FlowStats:
        fid = self._next_flow
        self._next_flow += 1
        fs = self.stats[fid] = FlowStats(fid, kind)
        return fs

    def _core_drop(self, pkt: Packet):
        fs = self.stats.get(pkt.flow)
        if fs is not None and pkt.ack < 0:
            fs.drops_core += 1

    def _tcp_flow(self, kind, host, sink, start, mss, total=None, on_done=None):
        cfg = self.cfg
        fs = self._new_flow(kind)
        fs.started_at = start
        tcp_sink = TcpSink(self.sim, fs.flow, (), fs, total, cfg.warmup)
        sender = TcpSender(self.sim, fs.flow, (), mss, total, fs, on_done)
        sender.route = self._forward(host, sink, tcp_sink)
        tcp_sink.reverse_route = self._reverse(host, sink, sender)
        if kind == "background":
            self.ingress.background.add(fs.flow)
        sender.start(start)
        self.senders.append(sender)
        return sender

    def _build_sources(self):
        cfg = self.cfg
        for i, src in enumerate(cfg.sources):
            if src.type == "tcp_bulk":
                for j in range(src.count):
                    rng = rng_stream(self.seed, "src:%d:%d" % (i, j))
                    start = src.start + rng.uniform(0.0, src.start_jitter)
                    kind = "background" if src.background else "tcp_bulk"
                    sender = self._tcp_flow(kind, src.host, src.sink, start, src.mss)
                    if src.stop is not None:
                        self.sim.schedule(max(src.stop, start), sender_close, sender)
            elif src.type == "udp_cbr":
                for j in range(src.count):
                    rng = rng_stream(self.seed, "src:%d:%d" % (i, j))
                    start = src.start + rng.uniform(0.0, src.start_jitter)
                    fs = self._new_flow("udp_cbr")
                    fs.started_at = start
                    sink = UdpSink(self.sim, fs, cfg.warmup)
                    stop = src.stop if src.stop is not None else math.inf
                    cbr = UdpCbrSource(self.sim, fs.flow, (), src.rate_bps, src.pkt_size,
                                       start, stop, fs)
                    cbr.route = self._forward(src.host, src.sink, sink)
                    cbr.begin()
            elif src.type == "tcp_short":
                gen = ShortFlowGenerator(rng_stream(self.seed, "short:%d" % i),
                                         src.mean_interarrival_s, src.payload_bytes, src.start)
                until = src.stop if src.stop is not None else cfg.duration
                for t in gen.session_times(min(until, cfg.duration)):
                    self._tcp_flow("tcp_short", src.host, src.sink, t, src.mss,
                                   src.payload_bytes)

    def run(self) -> RunResult:
        cfg = self.cfg
        self.sim.run_until(cfg.duration)
        q = self.bottleneck.queue
        core_drops, core_arrivals = {}, {}
        if isinstance(q, RioQueue):
            for m in (Mark.IN, Mark.OUT):
                core_drops[m.value] = q.early_drops[m] + q.overflow_drops[m]
                core_arrivals[m.value] = q.arrivals[m]
        alpha = getattr(getattr(self.marker, "fair_rate", None), "alpha", None)
        return RunResult(cfg.name, self.marker_type, self.replication, self.seed,
                         cfg.duration, cfg.duration - cfg.warmup,
                         [self.stats[k] for k in sorted(self.stats)],
                         self.sim.events_processed, core_drops, core_arrivals, alpha)


def sender_close(sender: TcpSender):
    """Stop a bulk sender from queueing new data; outstanding data still completes."""
    if sender.nseg is None:
        sender.nseg = max(sender.next_seq, 1)
        sender.total_bytes = sender.nseg * sender.mss


def build_scenario(cfg: ScenarioConfig, marker: Optional[str] = None,
                   replication: int = 0, trace: Optional[TextIO] = None) -> Scenario:
    return Scenario(cfg, marker, replication, trace)


def run_once(cfg: ScenarioConfig, marker: Optional[str] = None, replication: int = 0,
             trace_path: Optional[str] = None) -> RunResult:
    if trace_path is None:
        return build_scenario(cfg, marker, replication).run()
    with open(trace_path, "w") as fh:
        return build_scenario(cfg, marker, replication, fh).run()


def _run_task(args):
    data, marker, replication, trace_path = args
    return run_once(ScenarioConfig.model_validate(data), marker, replication, trace_path)


def run_all(cfg: ScenarioConfig, markers: Optional[Sequence[str]] = None,
            replications: Optional[int] = None, jobs: int = 1,
            trace_dir: Optional[Path] = None) -> List[RunResult]:
    """Every marker x replication; replication r uses seed + r for every marker."""
    markers = list(markers or cfg.markers)
    reps = replications if replications is not None else cfg.replications
    data = cfg.to_dict()
    tasks = []
    for m in markers:
        for r in range(reps):
            tp = None
            if trace_dir is not None:
                tp = str(Path(trace_dir) / ("%s_%s_r%d.trace" % (cfg.name, m, r)))
            tasks.append((data, m, r, tp))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_task, tasks))
    return [_run_task(t) for t in tasks]


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def flow_rows(res: RunResult) -> List[dict]:
    return [{
        "scenario": res.scenario, "marker": res.marker, "replication": res.replication,
        "flow_id": fs.flow, "flow_kind": fs.kind, "pkts_in": fs.pkts_in,
        "pkts_out": fs.pkts_out, "bytes_delivered": fs.bytes_delivered,
        "throughput_bps": res.throughput(fs),
    } for fs in res.stats]


def summary_rows(results: Sequence[RunResult]) -> List[dict]:
    """Per-run group rows, then replication='mean' rows averaging each metric."""
    rows = []
    acc: Dict[tuple, List[dict]] = {}
    for res in results:
        for s in res.summary():
            row = {"scenario": res.scenario, "marker": res.marker,
                   "replication": res.replication, "group": s.group, "n_flows": s.n_flows,
                   "mean_bps": s.mean_bps, "stddev_bps": s.stddev_bps,
                   "fi_throughput": s.fi_throughput, "fi_in_tokens": s.fi_in_tokens}
            rows.append(row)
            acc.setdefault((res.scenario, res.marker, s.group), []).append(row)
    for (scen, marker, group), rs in acc.items():
        agg = {"scenario": scen, "marker": marker, "replication": "mean", "group": group}
        for k in ("n_flows", "mean_bps", "stddev_bps", "fi_throughput", "fi_in_tokens"):
            vals = [r[k] for r in rs if not (isinstance(r[k], float) and math.isnan(r[k]))]
            agg[k] = sum(vals) / len(vals) if vals else math.nan
        rows.append(agg)
    return rows


def _write_csv(path: Path, fields: List[str], rows: List[dict]):
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(fields)
            for r in rows:
                w.writerow([_fmt(r[f]) for f in fields])
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError("writing %s failed: %s" % (path, exc.strerror or exc)) from exc


def run_experiment(cfg: ScenarioConfig, markers: Optional[Sequence[str]] = None,
                   out_dir=".", replications: Optional[int] = None, jobs: int = 1,
                   trace: bool = False):
    """Run and write ``<name>_flows.csv`` and ``<name>_summary.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_all(cfg, markers, replications, jobs, out if trace else None)
    flows = [row for res in results for row in flow_rows(res)]
    paths = (out / ("%s_flows.csv" % cfg.name), out / ("%s_summary.csv" % cfg.name))
    _write_csv(paths[0], FLOW_FIELDS, flows)
    _write_csv(paths[1], SUMMARY_FIELDS, summary_rows(results))
    return results, paths


def sweep(cfg: ScenarioConfig, param: str, values: Sequence, markers=None, out_dir=".",
          replications: Optional[int] = None, jobs: int = 1):
    """One run-set per value; long-format CSVs keyed by (value, marker, flow)."""
    resolve_param(cfg, param)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    flows, summ, per_value = [], [], []
    for v in values:
        vcfg = set_param(cfg, param, v)
        results = run_all(vcfg, markers, replications, jobs)
        per_value.append((v, results))
        for row in (r for res in results for r in flow_rows(res)):
            flows.append({"param": param, "value": v, **row})
        for row in summary_rows(results):
            summ.append({"param": param, "value": v, **row})
    paths = (out / ("%s_sweep_flows.csv" % cfg.name), out / ("%s_sweep_summary.csv" % cfg.name))
    _write_csv(paths[0], ["param", "value"] + FLOW_FIELDS, flows)
    _write_csv(paths[1], ["param", "value"] + SUMMARY_FIELDS, summ)
    return per_value, paths
