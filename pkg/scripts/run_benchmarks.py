#!/usr/bin/env python3
"""Run the benchmark scenarios and a batch of random goal permutations.

    python3 scripts/run_benchmarks.py                  # benchmarks only
    python3 scripts/run_benchmarks.py --random 20      # plus 20 permutations per size
    python3 scripts/run_benchmarks.py --json out.json  # also dump the rows
"""
import argparse
import json
import time

import numpy as np

from hnc.configuration import Configuration
from hnc.executor import run_hnc, transition_budget
from hnc.scenarios import BENCHMARKS, REPORTED_DEPLOYED, Scenario, line_order


def grid(n, spacing=3.0):
    side = int(np.ceil(np.sqrt(n)))
    return np.array([[spacing * (k % side), spacing * (k // side)] for k in range(n)], dtype=float)


def random_permutation(rng, n, layout="line"):
    base = line_order(range(1, n + 1)) if layout == "line" else grid(n)
    perm = rng.permutation(n)
    start = base + rng.normal(scale=1e-3, size=base.shape)
    r = np.ones(n)
    return Scenario(Configuration(start, r), Configuration(base[perm], r), name=f"perm{n}")


def row(name, sc, res, wall):
    st = res.stats
    return dict(name=name, n=sc.n, status=res.status, deployed=st.deployed_trees,
                transitions=st.transitions, budget=transition_budget(sc.n),
                min_clearance=st.min_clearance, final_error=st.final_error,
                sim_time=float(res.times[-1]) if len(res.times) else st.steps * sc.dt,
                wall_s=wall, reported=REPORTED_DEPLOYED.get(name))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--random", type=int, default=0, help="random permutations per size")
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 16])
    ap.add_argument("--layout", choices=["line", "grid"], default="grid")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="write all rows to this file")
    args = ap.parse_args()

    run_hnc(BENCHMARKS["two_disk_swap"](t_max=0.1), record=False)  # JIT warm-up
    rows = []
    for name, make in BENCHMARKS.items():
        sc = make()
        t0 = time.perf_counter()
        res = run_hnc(sc, record=False)
        rows.append(row(name, sc, res, time.perf_counter() - t0))
    rng = np.random.default_rng(args.seed)
    for n in args.sizes:
        for _ in range(args.random):
            sc = random_permutation(rng, n, args.layout)
            t0 = time.perf_counter()
            res = run_hnc(sc, record=False)
            rows.append(row(sc.name, sc, res, time.perf_counter() - t0))

    hdr = f"{'scenario':<20}{'n':>4} {'status':<13}{'deployed':>9}{'reported':>9}{'trans':>6}{'budget':>7}" \
          f"{'clearance':>10}{'t':>8}{'wall s':>8}"
    print(hdr)
    print("-" * len(hdr))
    for r in rows:
        rep = "" if r["reported"] is None else str(r["reported"])
        print(f"{r['name']:<20}{r['n']:>4} {r['status']:<13}{r['deployed']:>9}{rep:>9}"
              f"{r['transitions']:>6}{r['budget']:>7}{r['min_clearance']:>10.3f}"
              f"{r['sim_time']:>8.1f}{r['wall_s']:>8.2f}")
    failed = [r for r in rows if r["status"] != "goal_reached" or r["transitions"] > r["budget"]]
    print(f"\n{len(rows) - len(failed)}/{len(rows)} reached the goal within the transition budget")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
