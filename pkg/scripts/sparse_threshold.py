#!/usr/bin/env python3
"""Zero-row frequency for entries that vanish mod p with prob 1 - log(n)/n.

At the threshold sparsity the chance of an all-zero row tends to
1 - 1/e, so the cokernel stays infinite with positive probability and
the universal limit law cannot hold.  Prints the empirical trend, the
exact finite-n probability, and the limit.
"""

import argparse
import math
import sys

from cokerlab.montecarlo import sparse_failure_probe, sparse_zero_row_prob


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--schedule", default="100 200 500 1000 2000 5000")
    ap.add_argument("--u", type=int, default=0)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    schedule = tuple(int(x) for x in args.schedule.split())
    table = sparse_failure_probe(schedule, args.u, trials=args.trials, seed=args.seed)
    print(f"{'n':>6s} {'empirical':>10s} {'stderr':>8s} {'exact':>10s}")
    for n in schedule:
        f, se = table[n]
        exact = sparse_zero_row_prob(n, args.u, math.log(n) / n)
        print(f"{n:6d} {f:10.4f} {se:8.4f} {exact:10.4f}")
    print(f"limit 1 - 1/e = {1 - math.exp(-1):.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
