"""Compiled vs pure-Python simulation kernel.

Each mode runs in its own interpreter because the kernel flavour is chosen
at import time from ABRSIM_PURE_PYTHON.  The compiled mode is run once to
warm the numba cache before it is timed.

    python3 benchmarks/bench_kernel.py --sources 5 --build-segments 200
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = """
import json, sys, time
from abrsim.scenario import ScenarioConfig, run
cfg = ScenarioConfig(**json.loads(sys.argv[1]))
if sys.argv[2] == "warm":
    run(cfg)
t0 = time.perf_counter()
r = run(cfg)
dt = time.perf_counter() - t0
print(json.dumps({"seconds": dt, "events": r.events, "q_max": r.q_max, "q_max_time": r.q_max_time}))
"""


def measure(config, pure):
    env = dict(os.environ)
    env.pop("ABRSIM_PURE_PYTHON", None)
    if pure:
        env["ABRSIM_PURE_PYTHON"] = "1"
    warm = "cold" if pure else "warm"
    out = subprocess.run(
        [sys.executable, "-c", CHILD, json.dumps(config), warm],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sources", type=int, default=5)
    ap.add_argument("--build-segments", type=int, default=200)
    ap.add_argument("--distance-km", type=float, default=1000.0)
    args = ap.parse_args(argv)
    config = {"n_sources": args.sources, "build_segments": args.build_segments, "d": args.distance_km}

    rows = {}
    for name, pure in (("numba", False), ("python", True)):
        rows[name] = r = measure(config, pure)
        print(f"{name:>7}: {r['seconds']:8.3f} s  {r['events']:>9,d} events  "
              f"{r['events'] / r['seconds']:>12,.0f} events/s  q_max {r['q_max']}")

    a, b = rows["numba"], rows["python"]
    same = (a["events"], a["q_max"], a["q_max_time"]) == (b["events"], b["q_max"], b["q_max_time"])
    print(f"speedup: {b['seconds'] / a['seconds']:.1f}x  results identical: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
