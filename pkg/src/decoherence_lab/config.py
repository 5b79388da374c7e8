"""Config-file parsing for sweeps and state specs, plus the run manifest.

Config files are YAML trees with a required `schema_version`.  Parse
failures point at file:line:column; semantic failures name the offending
key by dotted path.  All floating-point output funnels through
:func:`format_float` / :func:`round_float` so artifacts print 12
significant digits everywhere.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
import yaml

from .engine import REE_FIRST_MID_LAST, REE_LAST, REE_NONE, SweepSpec
from .measurement import (
    MeasurementScenario,
    apparatus_layout,
    build_premeasurement_state,
)
from .quantum_core import (
    DensityOperator,
    RngStream,
    StateVector,
    SubsystemLayout,
    entries_to_matrix,
)
from .separability import BipartiteSplit, SolverSettings

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid config content; `where` is a file:line or dotted keypath."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


def format_float(x: float) -> str:
    return f"{float(x):.12g}"


def round_float(x: float) -> float:
    """Nearest double of the 12-significant-digit decimal; JSON emitted
    from these prints at most 12 significant digits (shortest repr)."""
    return float(format_float(x))


def load_yaml_tree(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        tree = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = path if mark is None else f"{path}:{mark.line + 1}:{mark.column + 1}"
        raise ConfigError(where, exc.problem or "malformed YAML") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(path, f"malformed YAML: {exc}") from exc
    if not isinstance(tree, dict):
        raise ConfigError(path, "top level must be a mapping")
    return tree


def _get(tree: dict, key: str, path: str, required: bool = True, default=None):
    if key in tree:
        return tree[key]
    if required:
        raise ConfigError(f"{path}.{key}" if path else key, "required key missing")
    return default


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(where, f"expected integer, got {value!r}")
    return value


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected number, got {value!r}")
    return float(value)


def _as_number_list(value, where: str, cast) -> tuple:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(where, f"expected non-empty list, got {value!r}")
    return tuple(cast(v, f"{where}[{i}]") for i, v in enumerate(value))


def _as_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re = _as_float(value[0], f"{where}[0]")
        im = _as_float(value[1], f"{where}[1]")
        return complex(re, im)
    raise ConfigError(where, f"expected number or [re, im] pair, got {value!r}")


def parse_alpha(value, where: str) -> tuple[complex, complex]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(where, "expected a list of two amplitudes")
    return (_as_complex(value[0], f"{where}[0]"),
            _as_complex(value[1], f"{where}[1]"))


def parse_time_grid(tree, where: str) -> tuple[float, ...]:
    if not isinstance(tree, dict):
        raise ConfigError(where, "expected mapping with t_max and dt")
    t_max = _as_float(_get(tree, "t_max", where), f"{where}.t_max")
    dt = _as_float(_get(tree, "dt", where), f"{where}.dt")
    if t_max <= 0 or dt <= 0:
        raise ConfigError(where, "t_max and dt must be positive")
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > 1e-9:
        raise ConfigError(where, f"t_max {t_max} is not a whole number of dt {dt} steps")
    return tuple(i * dt for i in range(n + 1))


def parse_ree_times(value, where: str):
    if value is None:
        return REE_LAST
    if isinstance(value, str):
        if value not in (REE_NONE, REE_LAST, REE_FIRST_MID_LAST):
            raise ConfigError(where, f"unknown policy {value!r}")
        return value
    if isinstance(value, (list, tuple)):
        return tuple(_as_float(v, f"{where}[{i}]") for i, v in enumerate(value))
    raise ConfigError(where, f"expected policy name or list of times, got {value!r}")


_SOLVER_KEYS = {
    "gap_tol": _as_float,
    "max_iterations": _as_int,
    "ensemble_size": _as_int,
    "inner_restarts": _as_int,
    "regularization": _as_float,
}


def parse_solver(tree, where: str, rng: RngStream) -> SolverSettings:
    kwargs = {"rng": rng}
    if tree is None:
        return SolverSettings(**kwargs)
    if not isinstance(tree, dict):
        raise ConfigError(where, "expected mapping of solver settings")
    for key, value in tree.items():
        if key not in _SOLVER_KEYS:
            raise ConfigError(f"{where}.{key}", "unknown solver setting")
        kwargs[key] = _SOLVER_KEYS[key](value, f"{where}.{key}")
    try:
        return SolverSettings(**kwargs)
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from exc


def parse_sweep_config(tree: dict, path: str,
                       seed_override: int | None = None) -> SweepSpec:
    version = _as_int(_get(tree, "schema_version", ""), "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version",
                          f"unsupported version {version}, expected {SCHEMA_VERSION}")
    known = {"schema_version", "master_seed", "alpha", "time_grid",
             "level_spacing", "seeds_per_cell", "cells", "ree_times", "solver"}
    for key in tree:
        if key not in known:
            raise ConfigError(key, "unknown key")
    seed = _as_int(_get(tree, "master_seed", ""), "master_seed")
    if seed_override is not None:
        seed = seed_override
    cells = _get(tree, "cells", "")
    if not isinstance(cells, dict):
        raise ConfigError("cells", "expected mapping of grid axes")
    for key in cells:
        if key not in ("env_dims", "micro_dims", "couplings", "leaks"):
            raise ConfigError(f"cells.{key}", "unknown grid axis")
    alpha_raw = _get(tree, "alpha", "", required=False)
    alpha = (parse_alpha(alpha_raw, "alpha") if alpha_raw is not None
             else (2.0 ** -0.5, 2.0 ** -0.5))
    try:
        return SweepSpec(
            env_dims=_as_number_list(_get(cells, "env_dims", "cells"),
                                     "cells.env_dims", _as_int),
            micro_dims=_as_number_list(_get(cells, "micro_dims", "cells"),
                                       "cells.micro_dims", _as_int),
            couplings=_as_number_list(_get(cells, "couplings", "cells"),
                                      "cells.couplings", _as_float),
            leaks=_as_number_list(_get(cells, "leaks", "cells"),
                                  "cells.leaks", _as_float),
            seeds_per_cell=_as_int(_get(tree, "seeds_per_cell", ""), "seeds_per_cell"),
            master_seed=seed,
            alpha=alpha,
            times=parse_time_grid(_get(tree, "time_grid", ""), "time_grid"),
            level_spacing=_as_float(
                _get(tree, "level_spacing", "", required=False, default=0.5),
                "level_spacing"),
            ree_times=parse_ree_times(tree.get("ree_times"), "ree_times"),
            solver=parse_solver(tree.get("solver"), "solver", RngStream(seed, 1)))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def resolved_sweep_tree(spec: SweepSpec) -> dict:
    """Canonical plain-data image of a sweep spec, as stored in manifests."""
    solver = spec.solver if spec.solver is not None else SolverSettings()
    return {
        "schema_version": SCHEMA_VERSION,
        "master_seed": spec.master_seed,
        "alpha": [[a.real, a.imag] for a in spec.alpha],
        "times": [round_float(t) for t in spec.times],
        "level_spacing": round_float(spec.level_spacing),
        "seeds_per_cell": spec.seeds_per_cell,
        "cells": {
            "env_dims": list(spec.env_dims),
            "micro_dims": list(spec.micro_dims),
            "couplings": [round_float(c) for c in spec.couplings],
            "leaks": [round_float(l) for l in spec.leaks],
        },
        "ree_times": (list(spec.ree_times)
                      if isinstance(spec.ree_times, tuple) else spec.ree_times),
        "solver": {
            "gap_tol": solver.gap_tol,
            "max_iterations": solver.max_iterations,
            "ensemble_size": solver.ensemble_size,
            "inner_restarts": solver.inner_restarts,
            "regularization": solver.regularization,
        },
    }


def config_digest(tree: dict) -> str:
    blob = json.dumps(tree, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    master_seed: int
    config: dict
    started_utc: str
    finished_utc: str
    outputs: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "master_seed": self.master_seed,
            "config": self.config,
            "config_digest": config_digest(self.config),
            "started_utc": self.started_utc,
            "finished_utc": self.finished_utc,
            "outputs": list(self.outputs),
        }

    @staticmethod
    def digest_valid(manifest_tree: dict) -> bool:
        return (config_digest(manifest_tree.get("config", {}))
                == manifest_tree.get("config_digest"))


# --- state specs for the separability command -------------------------------

def _two_qubit_layout() -> SubsystemLayout:
    return SubsystemLayout((("A", 2), ("B", 2)))


def _pure_two_qubit(amplitudes) -> DensityOperator:
    v = np.asarray(amplitudes, dtype=np.complex128)
    return StateVector(v / np.linalg.norm(v), _two_qubit_layout()).projector()


def bell_state() -> DensityOperator:
    return _pure_two_qubit([1.0, 0.0, 0.0, 1.0])


def singlet_state() -> DensityOperator:
    return _pure_two_qubit([0.0, 1.0, -1.0, 0.0])


def werner_state(p: float) -> DensityOperator:
    if not 0.0 <= p <= 1.0:
        raise ConfigError("p", f"mixing weight must be in [0, 1], got {p}")
    m = p * singlet_state().matrix + (1.0 - p) * np.eye(4) / 4.0
    return DensityOperator(m, _two_qubit_layout())


def product_state() -> DensityOperator:
    return _pure_two_qubit([1.0, 0.0, 0.0, 0.0])


def _parse_matrix(entries, dim: int, where: str) -> np.ndarray:
    if not isinstance(entries, (list, tuple)):
        raise ConfigError(where, "expected a row-major list of [re, im] pairs")
    if len(entries) != dim * dim:
        raise ConfigError(where, f"expected {dim * dim} entries, got {len(entries)}")
    pairs = [_as_complex(e, f"{where}[{i}]") for i, e in enumerate(entries)]
    return entries_to_matrix([[p.real, p.imag] for p in pairs], (dim, dim))


def parse_state_spec(tree: dict, path: str):
    """Build (state, split, scratch) from a state-spec tree.

    scratch carries side info: the pointer mixtures when supplied, and the
    solver seed.  The split puts the first factor (or the system factor)
    alone on side A.
    """
    version = _as_int(_get(tree, "schema_version", ""), "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version",
                          f"unsupported version {version}, expected {SCHEMA_VERSION}")
    builder = _get(tree, "builder", "")
    seed = _as_int(_get(tree, "seed", "", required=False, default=0), "seed")
    if builder == "bell":
        rho = bell_state()
    elif builder == "singlet":
        rho = singlet_state()
    elif builder == "product":
        rho = product_state()
    elif builder == "werner":
        rho = werner_state(_as_float(_get(tree, "p", ""), "p"))
    elif builder == "eq2-model":
        scen = MeasurementScenario(
            alpha=parse_alpha(_get(tree, "alpha", "", required=False,
                                   default=[2.0 ** -0.5, 2.0 ** -0.5]), "alpha"),
            micro_dim=_as_int(_get(tree, "micro_dim", ""), "micro_dim"),
            env_dim=1,
            rng=RngStream(seed, 0))
        _, rho = build_premeasurement_state(scen)
    elif builder == "inline":
        dims = _as_number_list(_get(tree, "dims", ""), "dims", _as_int)
        if len(dims) < 2:
            raise ConfigError("dims", "need at least two tensor factors")
        total = int(np.prod(dims))
        layout = SubsystemLayout(tuple((f"f{i}", d) for i, d in enumerate(dims)))
        mat = _parse_matrix(_get(tree, "matrix", ""), total, "matrix")
        try:
            rho = DensityOperator(mat, layout)
        except ValueError as exc:
            raise ConfigError("matrix", str(exc)) from exc
    else:
        raise ConfigError("builder", f"unknown builder {builder!r}")

    split = BipartiteSplit.of(rho.layout, (rho.layout.names[0],))

    mixtures = None
    mtree = tree.get("pointer_mixtures")
    if mtree is not None:
        where = "pointer_mixtures"
        if not isinstance(mtree, dict):
            raise ConfigError(where, "expected mapping")
        d_m = _as_int(_get(mtree, "micro_dim", where), f"{where}.micro_dim")
        layout = apparatus_layout(d_m)
        mats = []
        for key in ("m1", "m2"):
            mat = _parse_matrix(_get(mtree, key, where), 2 * d_m, f"{where}.{key}")
            try:
                mats.append(DensityOperator(mat, layout))
            except ValueError as exc:
                raise ConfigError(f"{where}.{key}", str(exc)) from exc
        mixtures = tuple(mats)
    return rho, split, {"seed": seed, "mixtures": mixtures,
                        "solver": tree.get("solver")}
