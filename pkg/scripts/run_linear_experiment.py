#!/usr/bin/env python3
"""Linear-Gaussian benchmark: Monte Carlo batch with both solvers.

Writes per-trial CSVs and aggregate summaries under out/linear/, one
directory per solver, ready for the plotting package:

    plot ospa_curve out/linear/gibbs/mc_summary.json out/linear/murty/mc_summary.json -o ospa.png
    plot tracks_xy_t out/linear/gibbs/trial_000/{tracks,truth,measurements}.csv -o tracks.png
"""

import sys

from glmbtrack.cli import main

TRIALS = 20
H_MAX = 1000

if __name__ == "__main__":
    out_root = sys.argv[1] if len(sys.argv) > 1 else "out/linear"
    for solver in ("gibbs", "murty"):
        code = main(
            [
                "run",
                "--scenario", "linear",
                "--solver", solver,
                "--h-max", str(H_MAX),
                "--mc", str(TRIALS),
                "--seed", "1000",
                "--output-dir", f"{out_root}/{solver}",
            ]
        )
        if code != 0:
            sys.exit(code)
    print(f"done: {out_root}/gibbs and {out_root}/murty")
