#!/usr/bin/env python3
"""Simulate the desk-scale tandem and check the analytic bounds against it.

Runs 10 replications of 1e6 measured slots for one- and two-hop paths at
utilization ~0.70 and validates that the empirical delay and backlog tails
at the epsilon = 1e-2 analytic thresholds stay below epsilon (one-sided 95%
upper confidence).  Exit code 0 means every check passed.
"""

import argparse
import sys

from sncalc.cli import main as cli_main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="desk_validation.csv")
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()
    argv = ["validate", "--scenario", "desk-validation", "--out", args.out,
            "--jobs", str(args.jobs), "-v"]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    sys.exit(cli_main(argv))
