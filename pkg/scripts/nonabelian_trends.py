#!/usr/bin/env python3
"""Exact pair moments of random free-group quotients, as trend tables.

For relators r_i and offsets r_i * b_i with b_i = x_i^-1, the pair
moment tends to |H1|^-u |H2|^-u (asymptotic independence); with b_i = 1
both quotients coincide and the moment stays at the dependent value.
"""

import argparse
import sys
from fractions import Fraction

from cokerlab.nonabelian import (
    build_group,
    identity_words,
    inverse_basis_words,
    pair_moment_random_quotients,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--group1", default="C2")
    ap.add_argument("--group2", default="C2")
    ap.add_argument("--u", type=int, default=0)
    ap.add_argument("--max-n", type=int, default=8)
    args = ap.parse_args()

    h1, h2 = build_group(args.group1), build_group(args.group2)
    limit = Fraction(1, (h1.order * h2.order) ** args.u)
    print(f"pair moments for ({h1.name}, {h2.name}), u={args.u}; limit = {limit}")
    print(f"{'n':>3s} {'b = basis inverses':>24s} {'b = identity':>24s}")
    for n in range(2, args.max_n + 1):
        total = n + args.u
        inv = pair_moment_random_quotients(n, args.u, h1, h2, inverse_basis_words(n, total))
        idw = pair_moment_random_quotients(n, args.u, h1, h2, identity_words(total))
        print(f"{n:3d} {str(inv):>14s} ={float(inv):7.4f} {str(idw):>14s} ={float(idw):7.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
