"""Closed-system dynamics of system + apparatus + environment and the
derived decoherence observables.

The Hamiltonian acts on apparatus x environment only (the measured system
is a spectator after the pre-measurement entangling step), so the global
pure state is evolved blockwise per system basis index with one cached
eigendecomposition per trajectory.  Along a time grid we track the
normalized system coherence block norm, the system-apparatus negativity,
and -- at designated times -- the relative-entropy budget from the
separability solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .measurement import MeasurementScenario, build_premeasurement_state
from .measures import (
    coherence_block_norm,
    mutual_information,
    negativity,
    trace_distance,
)
from .quantum_core import (
    MAX_TOTAL_DIM,
    ROLE_ENVIRONMENT,
    ROLE_MICRO,
    ROLE_POINTER,
    ROLE_SYSTEM,
    CapacityError,
    DensityOperator,
    HermitianOperator,
    RngStream,
    SubsystemLayout,
    gue_sample,
    pinch,
)
from .separability import (
    BipartiteSplit,
    SolverSettings,
    classical_correlation_of,
    closest_separable,
)

REE_NONE = "none"
REE_LAST = "last"
REE_FIRST_MID_LAST = "first_mid_last"

_DEGENERATE_COHERENCE = 1e-15


def apparatus_environment_layout(micro_dim: int, env_dim: int) -> SubsystemLayout:
    return SubsystemLayout(
        (("P", 2), ("M", micro_dim), ("E", env_dim)),
        {"P": ROLE_POINTER, "M": ROLE_MICRO, "E": ROLE_ENVIRONMENT})


def full_layout(micro_dim: int, env_dim: int) -> SubsystemLayout:
    return SubsystemLayout(
        (("S", 2), ("P", 2), ("M", micro_dim), ("E", env_dim)),
        {"S": ROLE_SYSTEM, "P": ROLE_POINTER, "M": ROLE_MICRO,
         "E": ROLE_ENVIRONMENT})


@dataclass(frozen=True)
class EvolutionConfig:
    """One trajectory: scenario, time grid, Hamiltonian scales, and which
    grid times get the (expensive) relative-entropy treatment.

    ree_times is one of the REE_* policies or an explicit tuple of grid
    times.  level_spacing is the half-width of the uniform on-site spectra
    of apparatus and environment.
    """

    scenario: MeasurementScenario
    times: tuple[float, ...]
    level_spacing: float = 0.5
    ree_times: str | tuple[float, ...] = REE_NONE
    solver: SolverSettings | None = None

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if len(ts) < 1:
            raise ValueError("time grid must contain at least one point")
        if abs(ts[0]) > 1e-12:
            raise ValueError(f"time grid must start at 0, got {ts[0]!r}")
        if any(b - a <= 0.0 for a, b in zip(ts, ts[1:])):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "times", ts)
        if self.level_spacing < 0.0:
            raise ValueError("level spacing half-width must be non-negative")
        total = 4 * self.scenario.micro_dim * self.scenario.env_dim
        if total > MAX_TOTAL_DIM:
            raise CapacityError(
                f"total dimension {total} exceeds limit {MAX_TOTAL_DIM}")
        if isinstance(self.ree_times, str):
            if self.ree_times not in (REE_NONE, REE_LAST, REE_FIRST_MID_LAST):
                raise ValueError(f"unknown ree_times policy {self.ree_times!r}")
        else:
            object.__setattr__(
                self, "ree_times", tuple(float(t) for t in self.ree_times))


def _resolve_ree_indices(times: tuple[float, ...], policy) -> tuple[int, ...]:
    n = len(times)
    if policy == REE_NONE:
        return ()
    if policy == REE_LAST:
        return (n - 1,)
    if policy == REE_FIRST_MID_LAST:
        return tuple(sorted(set((0, n // 2, n - 1))))
    idx = []
    for t in policy:
        hits = [i for i, u in enumerate(times) if abs(u - t) <= 1e-9]
        if not hits:
            raise ValueError(f"requested time {t!r} is not on the grid")
        idx.append(hits[0])
    return tuple(sorted(set(idx)))


def assemble_hamiltonian(cfg: EvolutionConfig, rng: RngStream) -> HermitianOperator:
    """Total Hamiltonian on apparatus x environment.

    H = H_A x 1 + 1 x H_E + coupling * (P_1 x V_1 + P_2 x V_2) + leak * W
    with uniform random on-site diagonals of half-width level_spacing,
    sector interactions V_i drawn from the unit-variance GUE ensemble on
    micro x environment, and the sector-mixing term W from the GUE on the
    whole apparatus x environment space.  Draw order: H_A diagonal, H_E
    diagonal, V_1, V_2, W; every term is drawn even at zero strength so
    the stream advances identically across coupling values.
    """
    s = cfg.scenario
    d_m, d_e = s.micro_dim, s.env_dim
    d_me = d_m * d_e
    d = 2 * d_me
    g = rng.generator
    w = cfg.level_spacing
    diag_a = g.uniform(-w, w, size=2 * d_m)
    diag_e = g.uniform(-w, w, size=d_e)
    v1 = gue_sample(d_me, 1.0 / math.sqrt(d_me), rng).matrix
    v2 = gue_sample(d_me, 1.0 / math.sqrt(d_me), rng).matrix
    wmix = gue_sample(d, 1.0 / math.sqrt(d), rng).matrix

    h = np.zeros((d, d), dtype=np.complex128)
    h[np.diag_indices(d)] = np.repeat(diag_a, d_e) + np.tile(diag_e, 2 * d_m)
    h[:d_me, :d_me] += s.coupling * v1
    h[d_me:, d_me:] += s.coupling * v2
    h += s.leak * wmix
    return HermitianOperator(h, apparatus_environment_layout(d_m, d_e))


@dataclass(frozen=True)
class TrajectoryRow:
    t: float
    coherence: float
    negativity: float
    ree: float | None = None
    ree_gap: float | None = None
    classical: float | None = None
    ratio: float | None = None


@dataclass(frozen=True)
class TrajectoryRecord:
    rows: tuple[TrajectoryRow, ...]
    tau: float | None
    pinch_distance: float
    final_state: DensityOperator
    seed_label: int


def estimate_decoherence_time(rows) -> float | None:
    """First crossing of the normalized coherence below 1/e.

    Linear interpolation between the bracketing grid points; None when the
    trajectory never reaches the threshold.
    """
    thresh = 1.0 / math.e
    prev_t = prev_c = None
    for row in rows:
        t, c = float(row.t), float(row.coherence)
        if c <= thresh:
            if prev_t is None or prev_c <= thresh:
                return t
            return prev_t + (prev_c - thresh) * (t - prev_t) / (prev_c - c)
        prev_t, prev_c = t, c
    return None


def evolve_trajectory(cfg: EvolutionConfig, rng: RngStream,
                      seed_label: int | None = None) -> TrajectoryRecord:
    """Run one trajectory and measure it along the grid.

    All randomness comes from `rng`: child stream 0 feeds the scenario's
    Haar draws, child stream 1 the Hamiltonian ensemble.  The coherence
    column is normalized to its t=0 value (identically zero if the initial
    branches carry no coherence).  Designated times additionally get the
    separability solve: ree, its duality gap, the classical correlation of
    the closest state found, and the ratio ree/classical.
    """
    scen = replace(cfg.scenario, rng=rng.derive(0))
    psi, _ = build_premeasurement_state(scen)
    ham = assemble_hamiltonian(cfg, rng.derive(1))
    d_m, d_e = scen.micro_dim, scen.env_dim
    d_sa = 4 * d_m
    layout_sa = psi.layout
    split = BipartiteSplit.of(layout_sa, ("S",))
    settings = cfg.solver if cfg.solver is not None else SolverSettings()
    ree_idx = set(_resolve_ree_indices(cfg.times, cfg.ree_times))

    # initial global state |psi> x |e_0>, reshaped to S-blocks over A x E
    amp = np.zeros((d_sa, d_e), dtype=np.complex128)
    amp[:, 0] = psi.amplitudes
    blocks = amp.reshape(2, 2 * d_m * d_e)

    evals, evecs = ham.eig()
    coeff = blocks @ evecs.conj()  # row s holds evecs^dag blocks[s]

    rows = []
    c0 = None
    rho_sa = None
    for i, t in enumerate(cfg.times):
        phases = np.exp(-1j * evals * t)
        bt = (coeff * phases[None, :]) @ evecs.T
        nrm = float(np.linalg.norm(bt))
        if abs(nrm - 1.0) > 1e-10:
            raise ArithmeticError(f"norm drift {nrm - 1.0:.3e} at t={t}")
        bt = bt / nrm
        mat = bt.reshape(d_sa, d_e)
        rho_sa = DensityOperator(mat @ mat.conj().T, layout_sa)

        c_raw = coherence_block_norm(rho_sa, "S", 0, 1)
        if c0 is None:
            c0 = c_raw
        coh = c_raw / c0 if c0 > _DEGENERATE_COHERENCE else 0.0
        neg = negativity(rho_sa, split)

        ree_v = gap_v = cls_v = ratio_v = None
        if i in ree_idx:
            rep = closest_separable(rho_sa, split, settings)
            ree_v, gap_v = rep.ree, rep.gap
            cls_v = classical_correlation_of(rep.closest_state, split)
            ratio_v = ree_v / cls_v if cls_v > 1e-12 else None
        rows.append(TrajectoryRow(float(t), float(coh), float(neg),
                                  ree_v, gap_v, cls_v, ratio_v))

    pd = trace_distance(rho_sa.matrix, pinch(rho_sa, "S").matrix)
    return TrajectoryRecord(
        rows=tuple(rows),
        tau=estimate_decoherence_time(rows),
        pinch_distance=float(pd),
        final_state=rho_sa,
        seed_label=int(seed_label if seed_label is not None else rng.seed))


@dataclass(frozen=True)
class SweepSpec:
    """Grid of (env_dim, micro_dim, coupling, leak) cells, several seeds
    per cell, all trajectories sharing the time grid and amplitudes."""

    env_dims: tuple[int, ...]
    micro_dims: tuple[int, ...]
    couplings: tuple[float, ...]
    leaks: tuple[float, ...]
    seeds_per_cell: int
    master_seed: int
    alpha: tuple[complex, complex] = field(
        default=(2.0 ** -0.5, 2.0 ** -0.5))
    times: tuple[float, ...] = ()
    level_spacing: float = 0.5
    ree_times: str | tuple[float, ...] = REE_LAST
    solver: SolverSettings | None = None

    def __post_init__(self):
        for name in ("env_dims", "micro_dims", "couplings", "leaks"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, vals)
        if self.seeds_per_cell < 1:
            raise ValueError("seeds_per_cell must be >= 1")
        if len(self.times) < 2:
            raise ValueError("sweep needs a time grid with at least two points")

    def cells(self):
        return tuple(product(self.env_dims, self.micro_dims,
                             self.couplings, self.leaks))


def cell_id(env_dim: int, micro_dim: int, coupling: float, leak: float) -> str:
    return f"dE{env_dim}_dM{micro_dim}_lam{coupling:g}_eta{leak:g}"


@dataclass(frozen=True)
class SweepRow:
    cell_id: str
    env_dim: int
    micro_dim: int
    coupling: float
    leak: float
    seed: int
    status: str
    tau: float | None = None
    late_ree: float | None = None
    late_ree_gap: float | None = None
    late_classical: float | None = None
    late_ratio: float | None = None
    pinch_distance: float | None = None
    error: str | None = None
    record: TrajectoryRecord | None = None


def run_sweep(spec: SweepSpec) -> tuple[SweepRow, ...]:
    """One summary row per (cell, seed), in grid order.

    The stream for cell index ci / seed index si is derived from the master
    seed as child (ci, si), so rows are reproducible independently of
    execution order and of which cells are present.  A failing trajectory
    is reported in its row's status instead of aborting the sweep.
    """
    master = RngStream(spec.master_seed, 0)
    out = []
    for ci, (d_e, d_m, lam, eta) in enumerate(spec.cells()):
        cid = cell_id(d_e, d_m, lam, eta)
        for si in range(spec.seeds_per_cell):
            rng = master.derive(ci, si)
            try:
                cfg = EvolutionConfig(
                    scenario=MeasurementScenario(
                        alpha=spec.alpha, micro_dim=d_m, env_dim=d_e,
                        coupling=lam, leak=eta),
                    times=spec.times,
                    level_spacing=spec.level_spacing,
                    ree_times=spec.ree_times,
                    solver=spec.solver)
                rec = evolve_trajectory(cfg, rng, seed_label=si)
            except Exception as exc:  # noqa: BLE001 - cell isolation
                out.append(SweepRow(
                    cell_id=cid, env_dim=d_e, micro_dim=d_m, coupling=lam,
                    leak=eta, seed=si, status=f"error:{type(exc).__name__}",
                    error=str(exc)))
                continue
            last = rec.rows[-1]
            out.append(SweepRow(
                cell_id=cid, env_dim=d_e, micro_dim=d_m, coupling=lam,
                leak=eta, seed=si, status="ok", tau=rec.tau,
                late_ree=last.ree, late_ree_gap=last.ree_gap,
                late_classical=last.classical, late_ratio=last.ratio,
                pinch_distance=rec.pinch_distance, record=rec))
    return tuple(out)


@dataclass(frozen=True)
class CorrelationBudget:
    """Quantum/classical correlation split of a system-rest state.

    ``ratio`` is the point estimate ree/classical; because the solver
    certifies ree only up to its duality gap, the honest statement is the
    interval [ree/classical, (ree + gap)/classical] carried in
    ``ratio_low``/``ratio_high``.
    """

    ree: float
    ree_gap: float
    classical: float
    ratio: float | None
    ratio_low: float | None
    ratio_high: float | None
    mutual_information: float
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "ree": self.ree,
            "ree_gap": self.ree_gap,
            "classical": self.classical,
            "ratio": self.ratio,
            "ratio_low": self.ratio_low,
            "ratio_high": self.ratio_high,
            "mutual_information": self.mutual_information,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def correlation_budget(rho: DensityOperator,
                       settings: SolverSettings | None = None) -> CorrelationBudget:
    """Split off the unique system-role factor and decompose its
    correlations with the rest: quantum part as relative entropy of
    entanglement, classical part as the correlation of the closest
    separable state found, plus the mutual information for scale."""
    sys_factors = rho.layout.factors_with_role(ROLE_SYSTEM)
    if len(sys_factors) != 1:
        raise ValueError(
            f"correlation budget needs exactly one system-role factor, "
            f"found {len(sys_factors)}")
    split = BipartiteSplit.of(rho.layout, (sys_factors[0],))
    rep = closest_separable(rho, split,
                            settings if settings is not None else SolverSettings())
    cls = classical_correlation_of(rep.closest_state, split)
    resolvable = cls > 1e-12
    return CorrelationBudget(
        ree=rep.ree,
        ree_gap=rep.gap,
        classical=cls,
        ratio=rep.ree / cls if resolvable else None,
        ratio_low=rep.ree / cls if resolvable else None,
        ratio_high=(rep.ree + rep.gap) / cls if resolvable else None,
        mutual_information=mutual_information(rho, split),
        converged=rep.converged,
        iterations=rep.iterations)
