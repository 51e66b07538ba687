import subprocess
import sys
from pathlib import Path

import pytest


def run_tracker(args):
    """Invoke the tracker CLI through its public command surface."""
    proc = subprocess.run(
        [sys.executable, "-m", "glmbtrack.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def run_outputs(tmp_path_factory):
    """A small pair of tracker runs (both solvers) to plot from."""
    root = tmp_path_factory.mktemp("runs")
    dirs = {}
    for solver in ("gibbs", "murty"):
        out = root / solver
        run_tracker(
            [
                "run",
                "--scenario",
                "linear",
                "--solver",
                solver,
                "--h-max",
                "200",
                "--mc",
                "2",
                "--scans",
                "8",
                "--seed",
                "11",
                "--workers",
                "1",
                "--output-dir",
                str(out),
            ]
        )
        dirs[solver] = out
    return dirs
