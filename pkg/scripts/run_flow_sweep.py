#!/usr/bin/env python3
"""Delay bound vs per-hop flow population (N = M) at several path lengths.

Writes one CSV per hop count (flow_sweep_H1.csv, ..., flow_sweep_H10.csv);
plot `bound_value` against N + M per file to see the bounds rise toward the
stability boundary at (N + M) = C / m ~= 3906 voice flows.
"""

import argparse
import sys

from sncalc.cli import main as cli_main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--prefix", default="flow_sweep")
    args = ap.parse_args()
    status = 0
    for hops in (1, 2, 5, 10):
        out = f"{args.prefix}_H{hops}.csv"
        code = cli_main(["sweep-flows", "--scenario", f"voice-fig4-H{hops}", "--out", out])
        print(f"H={hops}: wrote {out} (exit {code})")
        status = status or code
    sys.exit(status)
