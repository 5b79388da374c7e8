"""Shared fixtures: deterministic hypothesis profile and cached CLI runs.

The demo and the two shipped sweeps are each executed once per session into
a temporary directory; tests that only read the artifacts share the result
instead of re-running the binaries.
"""

import pathlib
import subprocess
import sys

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "lab",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lab")

REPO = pathlib.Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"


def run_cli(*args, cwd=None):
    """Run the installed CLI in a subprocess, returning CompletedProcess."""
    return subprocess.run(
        [sys.executable, "-m", "decoherence_lab", *map(str, args)],
        capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    res = run_cli("demo", "--out", out)
    assert res.returncode == 0, res.stderr
    return out


@pytest.fixture(scope="session")
def env_scan_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("env_scan")
    res = run_cli("sweep", "--config", CONFIGS / "env_scan.yaml", "--out", out)
    assert res.returncode == 0, res.stderr
    return out


def read_sweep_rows(path):
    import csv

    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))
