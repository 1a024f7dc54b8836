#!/usr/bin/env python3
"""Friedman-Washington marginal at several sizes: P(cok(A_n) = H) vs theory.

Writes a config, runs the simulate subcommand on it, and prints the
verdict.  The config file is left next to the outputs so the run can be
reproduced with `cokerlab simulate --config <path>`.
"""

import argparse
import json
import sys
from pathlib import Path

from cokerlab import cli

CONFIG = """\
p = {p}
k = 3
u = 0
n = {schedule}
trials = {trials}
sampler = haar
transforms = shift:0
targets = 0 ; 1 ; 2 ; 1+1
seed = {seed}
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--trials", type=int, default=50_000)
    ap.add_argument("--schedule", default="25 50 100")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="out/fw_marginal")
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "run.cfg"
    cfg_path.write_text(
        CONFIG.format(p=args.p, schedule=args.schedule, trials=args.trials, seed=args.seed)
    )
    code = cli.main(
        ["simulate", "--config", str(cfg_path), "--out", str(out), "--workers", str(args.workers)]
    )
    summary = json.loads((out / "summary.json").read_text())
    print(f"outputs in {out}; passed = {summary['passed']}, max |z| = {summary.get('max_abs_z')}")
    return code


if __name__ == "__main__":
    sys.exit(main())
