#!/usr/bin/env python3
"""Run the micro-dimension scan (configs/baseline.yaml) into
results/baseline/: late-time correlation budgets at micro dimensions
{2, 4, 8, 16} against a fixed 32-level environment, 10 seeds per cell.

Extra CLI flags pass through, e.g. `--seed 7` to override the master seed.
"""

import sys

from decoherence_lab.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "--config", "configs/baseline.yaml",
                   "--out", "results/baseline", *sys.argv[1:]]))
