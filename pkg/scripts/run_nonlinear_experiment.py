#!/usr/bin/env python3
"""Coordinated-turn benchmark with the particle backend.

The default is the scaled smoke configuration (reduced clutter, modest
component and particle budgets).  Pass --full for the heavyweight
settings (1e5 components, 1e5 particles per track); expect hours, not
minutes, at those budgets.
"""

import sys

from glmbtrack.cli import main

if __name__ == "__main__":
    full = "--full" in sys.argv
    args = [a for a in sys.argv[1:] if a != "--full"]
    out = args[0] if args else "out/nonlinear"
    code = main(
        [
            "run",
            "--scenario", "nonlinear",
            "--solver", "gibbs",
            "--backend", "smc",
            "--h-max", "100000" if full else "3000",
            "--particles", "100000" if full else "5000",
            "--clutter-scale", "1.0" if full else "0.25",
            "--mc", "1",
            "--seed", "42",
            "--output-dir", out,
        ]
    )
    sys.exit(code)
