#!/usr/bin/env python3
"""Time one field evaluation against n and fit a power law.

Prints the compiled kernel and the numpy reference side by side.
"""
import argparse
import time

import numpy as np

from hnc.field import FieldParams, hier_field, hier_field_reference
from hnc.sampling import random_in_stratum


def best_time(fn, reps, rounds=5):
    best = np.inf
    for _ in range(rounds):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64, 128, 256])
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-reference", action="store_true", help="skip the slow numpy path")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    fast, slow = [], []
    for n in args.sizes:
        y, tree = random_in_stratum(rng, n, args.dim, density=0.05)
        p = FieldParams(y, tree)
        x = y.positions
        hier_field(p, x)
        fast.append(best_time(lambda: hier_field(p, x), max(5, 4000 // n)))
        line = f"n={n:>4}  kernel {fast[-1] * 1e6:9.1f} us"
        if not args.no_reference:
            slow.append(best_time(lambda: hier_field_reference(p, x), max(2, 200 // n), rounds=3))
            line += f"   reference {slow[-1] * 1e6:10.1f} us"
        print(line)
    logn = np.log(args.sizes)
    print(f"kernel exponent {np.polyfit(logn, np.log(fast), 1)[0]:.2f}")
    if slow:
        print(f"reference exponent {np.polyfit(logn, np.log(slow), 1)[0]:.2f}")


if __name__ == "__main__":
    main()
