#!/usr/bin/env python3
"""Solver scaling sweep: wall-time tables and fitted log-log slopes."""

import json
import sys

from glmbtrack.cli import bench_scaling

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/bench_report.json"
    report = bench_scaling(n_samples=100)
    print(json.dumps(report, indent=2))
    with open(out, "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"written: {out}", file=sys.stderr)
