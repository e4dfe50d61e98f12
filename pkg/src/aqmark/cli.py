"""Command line: ``aqmark run | sweep | validate``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import List, Optional, Sequence

from .config import ConfigError, load_config
from .kernels import BACKEND

log = logging.getLogger("aqmark")


def _markers(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    out = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in ("tb", "pam", "fsam", "tsw2cm")]
    if bad or not out:
        raise argparse.ArgumentTypeError("unknown marker(s): %s" % ", ".join(bad or [text]))
    return out


def _values(text: str) -> List[float]:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            v = float(tok)
        except ValueError:
            raise argparse.ArgumentTypeError("not a number: %r" % tok) from None
        vals.append(int(v) if v.is_integer() and "." not in tok and "e" not in tok.lower() else v)
    if not vals:
        raise argparse.ArgumentTypeError("empty value list")
    return vals


def _fmt(x: float) -> str:
    return "-" if isinstance(x, float) and math.isnan(x) else "%.4g" % x


def comparison_table(results) -> str:
    """Replication-averaged group rows, one block per marker."""
    from .scenario import summary_rows

    rows = [r for r in summary_rows(results) if r["replication"] == "mean"]
    lines = ["%-8s %-10s %7s %12s %12s %8s %8s" % (
        "marker", "group", "flows", "mean_bps", "stddev_bps", "FI_tput", "FI_in")]
    for r in rows:
        lines.append("%-8s %-10s %7s %12s %12s %8s %8s" % (
            r["marker"], r["group"], _fmt(r["n_flows"]), _fmt(r["mean_bps"]),
            _fmt(r["stddev_bps"]), _fmt(r["fi_throughput"]), _fmt(r["fi_in_tokens"])))
    return "\n".join(lines)


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    return cfg


def cmd_validate(args) -> int:
    cfg = _load(args)
    print("%s: ok (%d source block(s), markers %s, %g s)" % (
        args.config, len(cfg.sources), ",".join(cfg.markers), cfg.duration))
    return 0


def cmd_run(args) -> int:
    from .scenario import run_experiment

    cfg = _load(args)
    log.info("running %s with the %s kernels", cfg.name, BACKEND)
    results, paths = run_experiment(cfg, args.markers, args.out, args.replications,
                                    args.jobs, args.trace)
    if not args.quiet:
        print(comparison_table(results))
    for p in paths:
        print("wrote %s" % p)
    return 0


def cmd_sweep(args) -> int:
    from .scenario import sweep

    cfg = _load(args)
    per_value, paths = sweep(cfg, args.param, args.values, args.markers, args.out,
                             args.replications, args.jobs)
    if not args.quiet:
        for v, results in per_value:
            print("== %s = %s" % (args.param, v))
            print(comparison_table(results))
    for p in paths:
        print("wrote %s" % p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aqmark", description="DiffServ aggregate marker simulator")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="scenario YAML file")
        p.add_argument("--seed", type=int, help="override the base seed")
        if out:
            p.add_argument("--out", default=".", help="output directory for CSVs")
            p.add_argument("--markers", type=_markers, help="comma list of tb,pam,fsam,tsw2cm")
            p.add_argument("--replications", type=int, help="override replication count")
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
            p.add_argument("-q", "--quiet", action="store_true", help="skip the summary table")

    p = sub.add_parser("run", help="run every marker x replication and write CSVs")
    common(p)
    p.add_argument("--trace", action="store_true", help="write a packet trace per run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="vary one numeric config field")
    common(p)
    p.add_argument("--param", required=True, help="dotted path, e.g. sources.0.count")
    p.add_argument("--values", required=True, type=_values, help="comma list, e.g. 4,8,16")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a config and report every error")
    common(p, out=False)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if getattr(args, "replications", None) is not None and args.replications < 1:
        print("error: --replications must be at least 1", file=sys.stderr)
        return 2
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
