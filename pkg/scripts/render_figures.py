#!/usr/bin/env python3
"""Render the standard figures from previously generated results/ CSVs.

Requires the `figures` package (see figures/README note in the top-level
README) and the outputs of the three run_* scripts.  Each figure is
produced by the figures CLI so this script touches only CSV artifacts.
"""

import subprocess
import sys
from pathlib import Path

JOBS = (
    ("decay", "results/demo/trajectory.csv", "results/figures/decay.png"),
    ("tau_vs_dim", "results/env_scan/sweep.csv",
     "results/figures/tau_vs_dim.png"),
    ("ratio_vs_dim", "results/baseline/sweep.csv",
     "results/figures/ratio_vs_dim.png"),
)


def main() -> int:
    Path("results/figures").mkdir(parents=True, exist_ok=True)
    status = 0
    for kind, src, dst in JOBS:
        if not Path(src).exists():
            print(f"skipping {kind}: {src} not found (run the matching "
                  f"run_* script first)", file=sys.stderr)
            status = 1
            continue
        res = subprocess.run([sys.executable, "-m", "figures",
                              "--kind", kind, "--in", src, "--out", dst])
        if res.returncode != 0:
            status = res.returncode
    return status


if __name__ == "__main__":
    sys.exit(main())
