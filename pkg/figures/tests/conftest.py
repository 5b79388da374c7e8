"""Shared fixtures: synthetic tables plus real lab artifacts.

The synthetic writers build just enough of the lab CSV layout (schema
comment, header, rows) to exercise each figure kind cheaply.  The session
fixtures shell out to the lab CLI itself so the acceptance test renders
from genuine artifacts.
"""

from __future__ import annotations

import pathlib
import subprocess
import sys

import pytest

REPO = pathlib.Path(__file__).resolve().parent.parent.parent
CONFIGS = REPO / "configs"


def write_table(path, columns, rows):
    """Write a lab-shaped CSV: ``# schema:`` comment, header, data rows."""
    lines = ["# schema: " + ",".join(columns), ",".join(columns)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def run_figures_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "figures", *map(str, args)],
        capture_output=True,
        text=True,
    )


def run_lab_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "decoherence_lab", *map(str, args)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def demo_trajectory(tmp_path_factory):
    out = tmp_path_factory.mktemp("lab_demo")
    result = run_lab_cli("demo", "--seed", "0", "--out", out)
    assert result.returncode == 0, result.stderr
    return out / "trajectory.csv"


@pytest.fixture(scope="session")
def baseline_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("lab_baseline")
    result = run_lab_cli("sweep", "--config", CONFIGS / "baseline.yaml",
                         "--out", out)
    assert result.returncode == 0, result.stderr
    return out / "sweep.csv"
