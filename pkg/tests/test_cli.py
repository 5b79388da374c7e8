"""CLI contract: artifacts, byte determinism, exit codes, JSON output."""

import json
import math

import numpy as np
import pytest

from decoherence_lab.cli import (
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    cmd_demo,
    write_csv,
    write_json,
)
from decoherence_lab.config import RunManifest

from conftest import read_sweep_rows, run_cli

TINY_SWEEP = """\
schema_version: 1
master_seed: 5
seeds_per_cell: 2
time_grid:
  t_max: 1.0
  dt: 0.5
ree_times: none
cells:
  env_dims: [4, 8]
  micro_dims: [1, 2]
  couplings: [1.0]
  leaks: [0.0]
"""

BELL_SPEC = "schema_version: 1\nbuilder: bell\n"


def write(path, text):
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# writers


def test_write_csv_bytes_are_frozen(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ("a", "b", "c"), [(1.0 / 3.0, None, "x"), (2.0, -1.5, "y")])
    expect = ("# schema: a,b,c\n"
              "a,b,c\n"
              "0.333333333333,,x\n"
              "2,-1.5,y\n")
    assert p.read_bytes().decode() == expect


def test_write_json_rounds_sorts_and_terminates(tmp_path):
    p = tmp_path / "t.json"
    write_json(p, {"b": 0.1 + 0.2, "a": [1.0 / 3.0, {"z": True, "y": None}]})
    text = p.read_text()
    assert text.endswith("}\n")
    tree = json.loads(text)
    assert tree["b"] == 0.3
    assert tree["a"][0] == float("0.333333333333")
    assert text.index('"a"') < text.index('"b"')


# ---------------------------------------------------------------------------
# demo


def test_demo_artifacts(demo_dir):
    assert sorted(f.name for f in demo_dir.iterdir()) == [
        "budget.json", "manifest.json", "trajectory.csv"]
    lines = (demo_dir / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "# schema: " + ",".join(TRAJECTORY_COLUMNS)
    assert lines[1] == ",".join(TRAJECTORY_COLUMNS)
    rows = read_sweep_rows(demo_dir / "trajectory.csv")
    assert len(rows) == 51
    assert rows[0]["t"] == "0" and rows[-1]["t"] == "5"
    assert all(r["cell_id"] == "demo" and r["seed"] == "0" for r in rows)
    scheduled = [i for i, r in enumerate(rows) if r["ree"] != ""]
    assert scheduled == [0, 25, 50]
    assert all(r["ratio"] == "" for i, r in enumerate(rows) if i not in scheduled)
    assert float(rows[0]["coherence"]) == 1.0


def test_demo_budget_and_manifest(demo_dir):
    budget = json.loads((demo_dir / "budget.json").read_text())
    assert set(budget) == {"ree", "ree_gap", "classical", "ratio", "ratio_low",
                           "ratio_high", "mutual_information", "converged",
                           "iterations", "t", "tau", "pinch_distance"}
    assert budget["t"] == 5.0
    assert budget["ratio_high"] >= budget["ratio_low"] > 0.0
    manifest = json.loads((demo_dir / "manifest.json").read_text())
    assert RunManifest.digest_valid(manifest)
    assert manifest["master_seed"] == 0
    assert manifest["outputs"] == ["trajectory.csv", "budget.json"]
    assert manifest["config"]["micro_dim"] == 4
    assert manifest["config"]["env_dim"] == 32


def test_demo_rerun_is_byte_identical(demo_dir, tmp_path):
    res = run_cli("demo", "--out", tmp_path)
    assert res.returncode == 0
    for name in ("trajectory.csv", "budget.json"):
        assert (tmp_path / name).read_bytes() == (demo_dir / name).read_bytes()


def test_demo_seed_changes_artifacts(demo_dir, tmp_path):
    assert cmd_demo(tmp_path, seed=1) == 0
    assert ((tmp_path / "trajectory.csv").read_bytes()
            != (demo_dir / "trajectory.csv").read_bytes())
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["master_seed"] == 1
    assert RunManifest.digest_valid(manifest)


def test_demo_creates_nested_outdir(tmp_path):
    assert cmd_demo(tmp_path / "a" / "b") == 0
    assert (tmp_path / "a" / "b" / "trajectory.csv").exists()


# ---------------------------------------------------------------------------
# sweep


def test_sweep_tiny_grid(tmp_path):
    cfg = write(tmp_path / "cfg.yaml", TINY_SWEEP)
    out = tmp_path / "run"
    res = run_cli("sweep", "--config", cfg, "--out", out)
    assert res.returncode == 0, res.stderr
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "# schema: " + ",".join(SWEEP_COLUMNS)
    rows = read_sweep_rows(out / "sweep.csv")
    assert len(rows) == 8
    assert [r["cell_id"] for r in rows[:3]] == [
        "dE4_dM1_lam1_eta0", "dE4_dM1_lam1_eta0", "dE4_dM2_lam1_eta0"]
    assert all(r["status"] == "ok" for r in rows)
    assert all(r["late_ree"] == "" for r in rows)
    assert {r["seed"] for r in rows} == {"0", "1"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert RunManifest.digest_valid(manifest)
    assert manifest["config"]["cells"]["env_dims"] == [4, 8]

    rerun = tmp_path / "rerun"
    res = run_cli("sweep", "--config", cfg, "--out", rerun)
    assert res.returncode == 0
    assert (rerun / "sweep.csv").read_bytes() == (out / "sweep.csv").read_bytes()


def test_sweep_seed_override(tmp_path):
    cfg = write(tmp_path / "cfg.yaml", TINY_SWEEP)
    base = tmp_path / "base"
    over = tmp_path / "over"
    assert run_cli("sweep", "--config", cfg, "--out", base).returncode == 0
    assert run_cli("sweep", "--config", cfg, "--out", over,
                   "--seed", 9).returncode == 0
    assert (base / "sweep.csv").read_bytes() != (over / "sweep.csv").read_bytes()
    manifest = json.loads((over / "manifest.json").read_text())
    assert manifest["master_seed"] == 9
    assert manifest["config"]["master_seed"] == 9


def test_sweep_malformed_config_exits_2(tmp_path):
    cfg = write(tmp_path / "bad.yaml", "a: 1\nb: [1, 2\n")
    res = run_cli("sweep", "--config", cfg, "--out", tmp_path / "o")
    assert res.returncode == 2
    assert "config error" in res.stderr
    assert "bad.yaml:" in res.stderr  # line-anchored diagnostic


def test_sweep_missing_key_exits_2(tmp_path):
    cfg = write(tmp_path / "bad.yaml",
                "schema_version: 1\nmaster_seed: 0\nseeds_per_cell: 1\n")
    res = run_cli("sweep", "--config", cfg, "--out", tmp_path / "o")
    assert res.returncode == 2
    assert "required key missing" in res.stderr


def test_sweep_missing_file_exits_3(tmp_path):
    res = run_cli("sweep", "--config", tmp_path / "absent.yaml",
                  "--out", tmp_path / "o")
    assert res.returncode == 3
    assert "i/o error" in res.stderr


def test_sweep_outdir_collision_exits_3(tmp_path):
    cfg = write(tmp_path / "cfg.yaml", TINY_SWEEP)
    clash = tmp_path / "file"
    clash.write_text("")
    res = run_cli("sweep", "--config", cfg, "--out", clash)
    assert res.returncode == 3


def test_sweep_capacity_exits_4(tmp_path):
    cfg = write(tmp_path / "cfg.yaml",
                TINY_SWEEP.replace("env_dims: [4, 8]", "env_dims: [2048]"))
    res = run_cli("sweep", "--config", cfg, "--out", tmp_path / "o")
    assert res.returncode == 4
    assert "capacity error" in res.stderr
    assert not (tmp_path / "o").exists()  # rejected before any work


def test_sweep_solver_capacity_exits_4(tmp_path):
    cfg = write(tmp_path / "cfg.yaml",
                TINY_SWEEP.replace("micro_dims: [1, 2]", "micro_dims: [32]")
                          .replace("ree_times: none", "ree_times: last"))
    res = run_cli("sweep", "--config", cfg, "--out", tmp_path / "o")
    assert res.returncode == 4
    assert "solver limit" in res.stderr


# ---------------------------------------------------------------------------
# separability


def separability_json(tmp_path, text, *extra):
    cfg = write(tmp_path / "state.yaml", text)
    res = run_cli("separability", "--config", cfg, *extra)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout)


def test_separability_bell(tmp_path):
    out = separability_json(tmp_path, BELL_SPEC)
    ln2 = math.log(2.0)
    assert out["builder"] == "bell"
    assert out["dims"] == [2, 2]
    assert abs(out["ree"] - ln2) < 1e-3
    assert abs(out["classical_corr"] - ln2) < 1e-2
    assert abs(out["negativity"] - 0.5) < 1e-12
    assert abs(out["chsh_max"] - 2 * math.sqrt(2)) < 1e-9
    assert out["converged"] is True


def test_separability_product(tmp_path):
    out = separability_json(tmp_path, "schema_version: 1\nbuilder: product\n")
    assert out["ree"] <= 1e-4
    assert out["classical_corr"] <= 1e-4
    assert out["negativity"] <= 1e-12
    assert abs(out["chsh_max"] - 2.0) < 1e-9


def test_separability_singlet_writes_file(tmp_path):
    out_dir = tmp_path / "res"
    out = separability_json(tmp_path, "schema_version: 1\nbuilder: singlet\n",
                            "--out", out_dir)
    assert abs(out["chsh_max"] - 2 * math.sqrt(2)) < 1e-9
    on_disk = json.loads((out_dir / "separability.json").read_text())
    assert on_disk == out


def test_separability_no_chsh_off_two_qubits(tmp_path):
    out = separability_json(
        tmp_path, "schema_version: 1\nbuilder: eq2-model\nmicro_dim: 3\n")
    assert out["dims"] == [2, 2, 3]
    assert "chsh_max" not in out
    assert abs(out["ree"] - math.log(2.0)) < 1e-3


def test_separability_pointer_mixtures(tmp_path):
    from decoherence_lab.quantum_core import matrix_to_entries
    m1 = np.zeros((4, 4), dtype=complex); m1[:2, :2] = np.eye(2) / 2
    m2 = np.zeros((4, 4), dtype=complex); m2[2:, 2:] = np.eye(2) / 2
    tree = {
        "schema_version": 1, "builder": "bell",
        "pointer_mixtures": {"micro_dim": 2,
                             "m1": matrix_to_entries(m1),
                             "m2": matrix_to_entries(m2)},
    }
    out = separability_json(tmp_path, json.dumps(tree))
    dist = out["pointer_distinguishability"]
    assert dist["finite"] is False and dist["value"] is None

    # equal-support mixtures give a finite symmetric relative entropy
    tree["pointer_mixtures"]["m1"] = matrix_to_entries(
        np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex))
    tree["pointer_mixtures"]["m2"] = matrix_to_entries(np.eye(4, dtype=complex) / 4)
    out = separability_json(tmp_path, json.dumps(tree))
    dist = out["pointer_distinguishability"]
    assert dist["finite"] is True and dist["value"] > 0.0


def test_separability_invalid_state_exits_2(tmp_path):
    from decoherence_lab.quantum_core import matrix_to_entries
    bad = np.diag([1.5, -0.5, 0.0, 0.0]).astype(complex)
    tree = {"schema_version": 1, "builder": "inline", "dims": [2, 2],
            "matrix": matrix_to_entries(bad)}
    cfg = write(tmp_path / "state.yaml", json.dumps(tree))
    res = run_cli("separability", "--config", cfg)
    assert res.returncode == 2
    assert "config error" in res.stderr


def test_separability_solver_override(tmp_path):
    out = separability_json(
        tmp_path, BELL_SPEC + "solver:\n  max_iterations: 2\n")
    assert out["iterations"] <= 2
    assert out["converged"] is False


# ---------------------------------------------------------------------------
# parser


def test_unknown_subcommand_exits_2():
    res = run_cli("explode")
    assert res.returncode == 2


def test_missing_required_flag_exits_2():
    res = run_cli("sweep")
    assert res.returncode == 2
