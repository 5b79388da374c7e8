#!/usr/bin/env python3
"""Run the environment-size scan (configs/env_scan.yaml) into
results/env_scan/: decoherence times at environment dimensions
{8, 16, 32, 64} with a fixed two-level micro factor, 10 seeds per cell.

Extra CLI flags pass through, e.g. `--seed 7` to override the master seed.
"""

import sys

from decoherence_lab.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "--config", "configs/env_scan.yaml",
                   "--out", "results/env_scan", *sys.argv[1:]]))
