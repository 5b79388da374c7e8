#!/usr/bin/env python3
"""Run the default single-trajectory experiment into results/demo/.

Extra CLI flags pass through, e.g. `python scripts/run_demo.py --seed 3`
or `--out elsewhere` to redirect the artifacts.
"""

import sys

from decoherence_lab.cli import main

if __name__ == "__main__":
    sys.exit(main(["demo", "--out", "results/demo", *sys.argv[1:]]))
