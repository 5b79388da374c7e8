"""Command-line entry point.

Three commands share one artifact convention: every run directory gets a
manifest.json whose config digest can be recomputed from the stored
config, every CSV starts with a `# schema:` comment naming its columns,
and every float is printed with 12 significant digits so identical seeds
give byte-identical CSVs.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 capacity error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import (
    ConfigError,
    RunManifest,
    SCHEMA_VERSION,
    config_digest,  # noqa: F401  (re-exported for manifest checks)
    format_float,
    load_yaml_tree,
    parse_solver,
    parse_state_spec,
    parse_sweep_config,
    resolved_sweep_tree,
    round_float,
)
from .engine import (
    REE_FIRST_MID_LAST,
    REE_NONE,
    EvolutionConfig,
    MeasurementScenario,
    correlation_budget,
    evolve_trajectory,
    run_sweep,
)
from .measures import chsh_max, negativity, pointer_distinguishability
from .quantum_core import MAX_TOTAL_DIM, CapacityError, RngStream
from .separability import (
    SolverSettings,
    classical_correlation_of,
    closest_separable,
)

TRAJECTORY_COLUMNS = ("t", "coherence", "negativity", "ree", "ree_gap",
                      "classical_corr", "ratio", "seed", "cell_id")
SWEEP_COLUMNS = ("cell_id", "env_dim", "micro_dim", "coupling", "leak",
                 "seed", "status", "tau", "late_ree", "late_ree_gap",
                 "late_classical", "late_ratio", "pinch_distance", "error")

DEMO_MICRO_DIM = 4
DEMO_ENV_DIM = 32
DEMO_COUPLING = 1.0
DEMO_LEAK = 0.0
DEMO_T_MAX = 5.0
DEMO_DT = 0.1


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path, columns, rows):
    """Rows are sequences aligned with `columns`; None becomes an empty
    field.  A `# schema:` comment line declares the columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema: " + ",".join(columns) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _round_tree(obj):
    if isinstance(obj, float):
        return round_float(obj)
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    return obj


def write_json(path, tree):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_round_tree(tree), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(outdir, seed, config_tree, started, outputs):
    manifest = RunManifest(
        tool_version=__version__,
        master_seed=seed,
        config=_round_tree(config_tree),
        started_utc=started,
        finished_utc=_utc_now(),
        outputs=tuple(outputs))
    write_json(outdir / "manifest.json", manifest.to_dict())


def _trajectory_rows(record, cell_id):
    for row in record.rows:
        yield (row.t, row.coherence, row.negativity, row.ree, row.ree_gap,
               row.classical, row.ratio, record.seed_label, cell_id)


def demo_config(seed: int) -> EvolutionConfig:
    n = int(round(DEMO_T_MAX / DEMO_DT))
    return EvolutionConfig(
        scenario=MeasurementScenario(
            alpha=(2.0 ** -0.5, 2.0 ** -0.5),
            micro_dim=DEMO_MICRO_DIM,
            env_dim=DEMO_ENV_DIM,
            coupling=DEMO_COUPLING,
            leak=DEMO_LEAK),
        times=tuple(i * DEMO_DT for i in range(n + 1)),
        ree_times=REE_FIRST_MID_LAST,
        solver=SolverSettings(rng=RngStream(seed, 1)))


def _demo_tree(cfg: EvolutionConfig, seed: int) -> dict:
    s = cfg.scenario
    solver = cfg.solver
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "demo",
        "master_seed": seed,
        "alpha": [[a.real, a.imag] for a in s.alpha],
        "micro_dim": s.micro_dim,
        "env_dim": s.env_dim,
        "coupling": s.coupling,
        "leak": s.leak,
        "times": list(cfg.times),
        "level_spacing": cfg.level_spacing,
        "ree_times": cfg.ree_times,
        "solver": {
            "gap_tol": solver.gap_tol,
            "max_iterations": solver.max_iterations,
            "ensemble_size": solver.ensemble_size,
            "inner_restarts": solver.inner_restarts,
            "regularization": solver.regularization,
        },
    }


def cmd_demo(outdir, seed: int = 0) -> int:
    """Run the default scenario end to end and write its artifacts."""
    outdir = Path(outdir)
    started = _utc_now()
    cfg = demo_config(seed)
    record = evolve_trajectory(cfg, RngStream(seed, 0), seed_label=seed)
    budget = correlation_budget(record.final_state, cfg.solver)

    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "trajectory.csv", TRAJECTORY_COLUMNS,
              _trajectory_rows(record, "demo"))
    budget_tree = budget.to_dict()
    budget_tree.update({
        "t": record.rows[-1].t,
        "tau": record.tau,
        "pinch_distance": record.pinch_distance,
    })
    write_json(outdir / "budget.json", budget_tree)
    _write_manifest(outdir, seed, _demo_tree(cfg, seed), started,
                    ["trajectory.csv", "budget.json"])
    return 0


def _check_sweep_capacity(spec):
    solver = spec.solver if spec.solver is not None else SolverSettings()
    for d_e, d_m, _, _ in spec.cells():
        total = 4 * d_m * d_e
        if total > MAX_TOTAL_DIM:
            raise CapacityError(
                f"cell d_E={d_e} d_M={d_m}: total dimension {total} exceeds "
                f"{MAX_TOTAL_DIM}")
        if spec.ree_times != REE_NONE and 4 * d_m > solver.max_dim:
            raise CapacityError(
                f"cell d_M={d_m}: separability solves need dimension "
                f"{4 * d_m} > solver limit {solver.max_dim}")


def cmd_sweep(config_path, outdir, seed_override: int | None = None) -> int:
    """Run the sweep described by a config file; one CSV row per
    (cell, seed), failures recorded in-row rather than aborting."""
    tree = load_yaml_tree(config_path)
    spec = parse_sweep_config(tree, str(config_path), seed_override)
    _check_sweep_capacity(spec)
    started = _utc_now()
    rows = run_sweep(spec)

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "sweep.csv", SWEEP_COLUMNS,
              ((r.cell_id, r.env_dim, r.micro_dim, r.coupling, r.leak,
                r.seed, r.status, r.tau, r.late_ree, r.late_ree_gap,
                r.late_classical, r.late_ratio, r.pinch_distance, r.error)
               for r in rows))
    _write_manifest(outdir, spec.master_seed, resolved_sweep_tree(spec),
                    started, ["sweep.csv"])
    return 0


def cmd_separability(spec_path, outdir=None) -> int:
    """Solve one state spec and print its correlation measures as JSON."""
    tree = load_yaml_tree(spec_path)
    rho, split, extra = parse_state_spec(tree, str(spec_path))
    settings = parse_solver(extra["solver"], "solver",
                            RngStream(extra["seed"], 1))
    report = closest_separable(rho, split, settings)
    out = {
        "builder": tree.get("builder"),
        "dims": list(rho.layout.dims),
        "ree": report.ree,
        "ree_gap": report.gap,
        "classical_corr": classical_correlation_of(report.closest_state, split),
        "negativity": negativity(rho, split),
        "converged": report.converged,
        "iterations": report.iterations,
    }
    if rho.layout.dims == (2, 2):
        out["chsh_max"] = chsh_max(rho)
    if extra["mixtures"] is not None:
        m1, m2 = extra["mixtures"]
        d = pointer_distinguishability(m1, m2)
        out["pointer_distinguishability"] = {
            "value": d.value if d.finite else None,
            "finite": d.finite,
        }
    text = json.dumps(_round_tree(out), indent=2, sort_keys=True)
    print(text)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "separability.json", "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decoherence-lab",
        description="Decoherence trajectories, sweeps, and separability "
                    "solves for system-apparatus-environment models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_demo = sub.add_parser("demo", help="run the default scenario")
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--out", default=".")

    p_sweep = sub.add_parser("sweep", help="run a configured sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="override the config's master seed")
    p_sweep.add_argument("--out", default=".")

    p_sep = sub.add_parser("separability",
                           help="solve one state spec and print JSON")
    p_sep.add_argument("--config", required=True, help="state spec file")
    p_sep.add_argument("--out", default=None,
                       help="also write separability.json here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "demo":
            return cmd_demo(args.out, seed=args.seed)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.out, seed_override=args.seed)
        return cmd_separability(args.config, outdir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
