#!/usr/bin/env python3
"""Dependent pair (cok(A), cok(A + pI)): joint cells and the subspace moment.

The joint law concentrates on equal p-ranks; the mixed moment onto
(H1, H2) counts the subspaces of F_p^r1 x F_p^r2 with surjective
projections.  Both are checked against simulation in one run.
"""

import argparse
import sys

from cokerlab.montecarlo import (
    ExperimentPlan,
    compare_with_theory,
    estimate_mixed_moment,
    pshift_transform,
    run_joint_cokernel,
    shift_transform,
    target_label,
)
from cokerlab.padic import haar_sampler
from cokerlab.pgroup import (
    PGroupType,
    density_joint_pshift,
    subspace_full_projection_count,
    trivial_group,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--trials", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()

    p = args.p
    t0 = trivial_group(p)
    z1 = PGroupType(p, (1,))
    z2 = PGroupType(p, (2,))
    targets = ((t0, t0), (z1, z1), (z1, z2), (z1, PGroupType(p, (1, 1))))
    plan = ExperimentPlan(
        p=p, k=3, u=0, n_schedule=(args.n,), trials=args.trials,
        sampler=haar_sampler(), transforms=(shift_transform(0), pshift_transform()),
        targets=targets, seed=args.seed,
    )
    emp = run_joint_cokernel(plan, workers=args.workers)
    theory = {target_label(t): float(density_joint_pshift(*t)) for t in targets}
    report = compare_with_theory(emp, theory)
    print(f"joint cells at n={args.n}, {args.trials} trials:")
    for row in report.rows:
        if row.theory is None:
            continue
        print(
            f"  {'|'.join(row.cell):12s} freq={row.freq:.5f} "
            f"theory={row.theory:.5f} z={row.z:+.2f}"
        )

    moment_plan = ExperimentPlan(
        p=p, k=1, u=0, n_schedule=(args.n,), trials=args.trials,
        sampler=haar_sampler(), transforms=(shift_transform(0), pshift_transform()),
        seed=args.seed,
    )
    for h1, h2 in ((z1, z1), (PGroupType(p, (1, 1)), PGroupType(p, (1, 1)))):
        est, se = estimate_mixed_moment(moment_plan, (h1, h2), workers=args.workers)
        want = subspace_full_projection_count(p, h1.rank, h2.rank)
        print(f"moment onto rank ({h1.rank},{h2.rank}): {est:.4f} +- {se:.4f} vs N = {want}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
