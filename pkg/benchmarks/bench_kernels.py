"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--scenario s5_misbehaving_udp] [--repeat 5]

Part one times the per-packet kernels directly; part two runs one full
scenario per backend in a subprocess (the backend is chosen at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

from aqmark import _pykernels

try:
    from aqmark import _kernels
except ImportError:
    _kernels = None

N = 200_000


def kernel_cases(k):
    tb = k.TokenBucket(1e6, 62500.0)
    est = k.RateEstimator(0.1)
    fr = k.FairRate(1e6)
    tsw = k.TimeSlidingWindow(1e6)
    red = k.RedAverage(0.002, 0.0016)
    state = {"t": 0.0}

    def bucket():
        t = state["t"] = state["t"] + 0.001
        tb.refill(t)
        tb.update_avg()
        tb.try_consume(1000)

    def stamp():
        t = state["t"] = state["t"] + 0.001
        est.update(8000.0, t)

    def fairrate():
        t = state["t"] = state["t"] + 0.001
        fr.tick(t)
        fr.on_arrival(8000.0, 2e6, True, t)

    def tsw2cm():
        t = state["t"] = state["t"] + 0.001
        tsw.update(8000.0, t)
        tsw.out_probability()

    def rio_avg():
        t = state["t"] = state["t"] + 0.001
        red.arrive(20, 5, t)

    def pam():
        k.pam_probability(31000.0, 6250.0, 56250.0, 1.0, 0.0)

    return {"token bucket": bucket, "rate stamp": stamp, "fair rate": fairrate,
            "tsw2cm": tsw2cm, "red average": rio_avg, "pam probability": pam}


def bench_kernels(repeat):
    backends = [("python", _pykernels)] + ([("compiled", _kernels)] if _kernels else [])
    results = {}
    for name, mod in backends:
        for case, fn in kernel_cases(mod).items():
            best = min(timeit.repeat(fn, number=N, repeat=repeat))
            results.setdefault(case, {})[name] = best / N * 1e9
    print("%-16s %14s %14s %8s" % ("kernel", "python ns/op", "compiled ns/op", "speedup"))
    for case, r in results.items():
        c = r.get("compiled")
        print("%-16s %14.1f %14s %8s" % (case, r["python"], "%.1f" % c if c else "-",
                                         "%.1fx" % (r["python"] / c) if c else "-"))


SNIPPET = """
import time
from aqmark import BACKEND, scenario_path
from aqmark.config import load_config
from aqmark.scenario import run_all
cfg = load_config(scenario_path(%r))
t = time.perf_counter()
res = run_all(cfg, replications=1)
dt = time.perf_counter() - t
print(BACKEND, dt, sum(r.events for r in res))
"""


def bench_scenario(name):
    rows = []
    for env_extra in ({"AQMARK_PURE_PYTHON": "1"}, {}):
        env = dict(os.environ, **env_extra)
        out = subprocess.run([sys.executable, "-c", SNIPPET % name], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        rows.append((out[0], float(out[1]), int(out[2])))
    print("\nscenario %s, one replication of every configured marker" % name)
    for backend, dt, events in rows:
        print("  %-9s %7.2f s  %9d events  %7.0f events/s" % (backend, dt, events, events / dt))
    if rows[0][0] != rows[1][0]:
        print("  end-to-end speedup %.2fx" % (rows[0][1] / rows[1][1]))
    else:
        print("  compiled extension unavailable; both runs used the Python kernels")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="s5_misbehaving_udp")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-scenario", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if not args.skip_scenario:
        bench_scenario(args.scenario)


if __name__ == "__main__":
    main()
