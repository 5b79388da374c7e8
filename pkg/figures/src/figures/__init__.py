"""Render decoherence-lab CSV artifacts as figures.

Three figure kinds cover the laboratory's standard outputs:

``decay``
    One coherence-vs-time line per seed from a trajectory table, with the
    across-seed median drawn on top.
``tau_vs_dim``
    Median decoherence time against environment dimension from a sweep
    table, with an interquartile band, on a log-scaled dimension axis.
``ratio_vs_dim``
    Median late-time quantum/classical correlation ratio against
    microscopic dimension, same presentation as ``tau_vs_dim``.

Inputs are the CSV files written by the lab's CLI: a ``# schema:`` comment
line, a header row, then data.  Rendering never modifies the input; the
only side effect is the written image.  Every ``render`` call also returns
the plotted series so callers (and tests) can check the numbers that went
into the figure without parsing it back out of the image.

Aggregation is deliberately limited to the median and the interquartile
range; anything more belongs in downstream analysis, not in the plots.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "KINDS",
    "FigureSpec",
    "SchemaError",
    "read_table",
    "decay_series",
    "dimension_series",
    "render",
]

__version__ = "0.1.0"

KINDS = ("decay", "tau_vs_dim", "ratio_vs_dim")

# Columns each kind actually reads; the file may declare more.
_REQUIRED_COLUMNS = {
    "decay": ("t", "coherence", "seed"),
    "tau_vs_dim": ("env_dim", "tau", "status"),
    "ratio_vs_dim": ("micro_dim", "late_ratio", "status"),
}

_SCHEMA_PREFIX = "# schema:"


class SchemaError(ValueError):
    """The input CSV does not carry the columns a figure kind needs."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: which table, as which kind of figure, to which file."""

    input_csv: str
    kind: str
    output: str

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; expected one of {list(KINDS)}"
            )
        if not Path(self.input_csv).is_file():
            raise FileNotFoundError(f"input CSV not found: {self.input_csv}")


def read_table(path: str | Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    """Read a lab CSV, checking its declared schema against *required*.

    The first line must be the ``# schema:`` comment the lab writes ahead of
    the header; its column list is what we validate, so a mismatch is
    reported in terms of the file's own declaration rather than a parse
    failure further down.
    """
    with open(path, encoding="utf-8", newline="") as handle:
        first = handle.readline()
        if not first.startswith(_SCHEMA_PREFIX):
            raise SchemaError(
                f"{path}: first line is not a '{_SCHEMA_PREFIX}' comment; "
                "not a lab CSV?"
            )
        declared = tuple(
            name.strip() for name in first[len(_SCHEMA_PREFIX):].strip().split(",")
        )
        missing = [name for name in required if name not in declared]
        if missing:
            raise SchemaError(
                f"{path}: schema lacks column(s) {missing}; "
                f"declared columns are {list(declared)}"
            )
        return list(csv.DictReader(handle))


def decay_series(rows: list[dict[str, str]]) -> dict:
    """Group coherence-vs-time traces by seed and take the pointwise median.

    Rows arrive in the order the lab wrote them: each seed's trace is
    contiguous and follows the time grid.  All seeds must cover the same
    grid or the pointwise median is meaningless.
    """
    per_seed: dict[str, list[float]] = {}
    grids: dict[str, list[float]] = {}
    for row in rows:
        seed = row["seed"]
        per_seed.setdefault(seed, []).append(float(row["coherence"]))
        grids.setdefault(seed, []).append(float(row["t"]))
    if not per_seed:
        raise ValueError("trajectory table has no rows")
    seeds = list(per_seed)
    t = grids[seeds[0]]
    for seed in seeds[1:]:
        if grids[seed] != t:
            raise ValueError(
                f"seed {seed} covers a different time grid than seed {seeds[0]}"
            )
    stacked = np.array([per_seed[seed] for seed in seeds])
    return {
        "t": t,
        "per_seed": {seed: per_seed[seed] for seed in seeds},
        "median": [float(v) for v in np.median(stacked, axis=0)],
    }


def dimension_series(
    rows: list[dict[str, str]], dim_column: str, value_column: str
) -> dict:
    """Collect a sweep column per dimension and reduce to median and IQR.

    Only ``status == "ok"`` rows with a non-blank value participate; error
    rows and trajectories whose estimator returned nothing are dropped, not
    imputed.
    """
    pools: dict[int, list[float]] = {}
    for row in rows:
        if row["status"] != "ok" or row[value_column] == "":
            continue
        pools.setdefault(int(row[dim_column]), []).append(float(row[value_column]))
    if not pools:
        raise ValueError(
            f"no usable rows: every row lacks {value_column!r} or has error status"
        )
    dims = sorted(pools)
    return {
        "x": dims,
        "median": [float(np.median(pools[d])) for d in dims],
        "iqr_low": [float(np.percentile(pools[d], 25)) for d in dims],
        "iqr_high": [float(np.percentile(pools[d], 75)) for d in dims],
        "counts": {d: len(pools[d]) for d in dims},
    }


def _render_decay(rows: list[dict[str, str]], output: str) -> dict:
    series = decay_series(rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for seed, trace in series["per_seed"].items():
        ax.plot(series["t"], trace, color="0.65", linewidth=0.9, zorder=1)
    ax.plot(
        series["t"],
        series["median"],
        color="C3",
        linewidth=2.0,
        zorder=2,
        label=f"median over {len(series['per_seed'])} seed(s)",
    )
    ax.set_xlabel("time")
    ax.set_ylabel("normalized coherence")
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return series


def _render_dimension(
    rows: list[dict[str, str]],
    output: str,
    dim_column: str,
    value_column: str,
    xlabel: str,
    ylabel: str,
) -> dict:
    series = dimension_series(rows, dim_column, value_column)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.fill_between(
        series["x"],
        series["iqr_low"],
        series["iqr_high"],
        color="C0",
        alpha=0.25,
        linewidth=0,
        label="interquartile range",
    )
    ax.plot(series["x"], series["median"], color="C0", marker="o", label="median")
    ax.set_xscale("log", base=2)
    # One tick per dimension actually present, labelled with its value.
    ax.set_xticks(series["x"])
    ax.set_xticklabels([str(d) for d in series["x"]])
    ax.minorticks_off()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return series


def render(spec: FigureSpec) -> dict:
    """Render *spec* and return the plotted series.

    The returned dictionary holds exactly the numbers drawn into the image:
    per-seed traces plus their median for ``decay``, and per-dimension
    ``x`` / ``median`` / ``iqr_low`` / ``iqr_high`` for the dimension
    trends.
    """
    rows = read_table(spec.input_csv, _REQUIRED_COLUMNS[spec.kind])
    out_dir = Path(spec.output).resolve().parent
    out_dir.mkdir(parents=True, exist_ok=True)
    if spec.kind == "decay":
        return _render_decay(rows, spec.output)
    if spec.kind == "tau_vs_dim":
        return _render_dimension(
            rows,
            spec.output,
            dim_column="env_dim",
            value_column="tau",
            xlabel="environment dimension",
            ylabel="decoherence time",
        )
    return _render_dimension(
        rows,
        spec.output,
        dim_column="micro_dim",
        value_column="late_ratio",
        xlabel="microscopic dimension",
        ylabel="late-time quantum/classical ratio",
    )
