#!/usr/bin/env python3
"""Navigate between every ordered pair of trees and compare path lengths to the bound.

n = 6 (945^2 pairs) takes a few minutes.
"""
import argparse
import time
from collections import Counter

from hnc.hierarchy import count_trees, enumerate_trees, nni_navigate, nni_path_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=5)
    args = ap.parse_args()
    ok = True
    for n in range(3, args.max_n + 1):
        t0 = time.perf_counter()
        trees = list(enumerate_trees(range(1, n + 1)))
        assert len(trees) == count_trees(n)
        hist = Counter()
        for s in trees:
            for t in trees:
                hist[len(nni_navigate(s, t)) - 1] += 1
        worst = max(hist)
        bound = nni_path_bound(n)
        ok &= worst == bound
        mean = sum(k * v for k, v in hist.items()) / sum(hist.values())
        print(f"n={n}: {len(trees)} trees, worst path {worst} (bound {bound}), "
              f"mean {mean:.2f}, {time.perf_counter() - t0:.1f} s")
        print("   lengths:", dict(sorted(hist.items())))
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
