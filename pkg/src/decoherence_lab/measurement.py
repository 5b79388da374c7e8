"""State builders for a two-outcome measurement with a structured apparatus.

The apparatus carries a pointer qubit times a micro factor of dimension d_M,
so the two pointer sectors are the subspaces |1>_P x C^{d_M} and
|2>_P x C^{d_M} (1-based outcome labels, 0-based basis indices).  The
pre-measurement state entangles the system qubit with Haar-random vectors
in opposite sectors; the pre-selection state is its sector-diagonal
(pinched) mixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum_core import (
    NORM_TOL,
    ROLE_MICRO,
    ROLE_POINTER,
    ROLE_SYSTEM,
    DensityOperator,
    RngStream,
    StateVector,
    SubsystemLayout,
    haar_random_state,
)

_BLOCK_TOL = 1e-10


class DegenerateOutcomeError(ValueError):
    """Post-selection on an outcome whose probability is numerically zero."""


def apparatus_layout(micro_dim: int) -> SubsystemLayout:
    return SubsystemLayout(
        (("P", 2), ("M", micro_dim)),
        {"P": ROLE_POINTER, "M": ROLE_MICRO})


def system_apparatus_layout(micro_dim: int) -> SubsystemLayout:
    return SubsystemLayout(
        (("S", 2), ("P", 2), ("M", micro_dim)),
        {"S": ROLE_SYSTEM, "P": ROLE_POINTER, "M": ROLE_MICRO})


@dataclass(frozen=True)
class MeasurementScenario:
    """Two-outcome scenario: amplitudes, apparatus and environment sizes,
    coupling strength, pointer-sector leak strength, and the random stream
    feeding every draw the scenario makes."""

    alpha: tuple[complex, complex]
    micro_dim: int
    env_dim: int
    coupling: float = 1.0
    leak: float = 0.0
    rng: RngStream | None = None

    def __post_init__(self):
        a = tuple(complex(x) for x in self.alpha)
        if len(a) != 2:
            raise ValueError("exactly two branch amplitudes required")
        nrm = abs(a[0]) ** 2 + abs(a[1]) ** 2
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"|alpha1|^2 + |alpha2|^2 = {nrm!r}, must be 1")
        object.__setattr__(self, "alpha", a)
        if self.micro_dim < 1 or self.env_dim < 1:
            raise ValueError("micro and environment dimensions must be >= 1")
        if self.coupling < 0.0 or self.leak < 0.0:
            raise ValueError("coupling and leak strengths must be non-negative")

    @property
    def apparatus_dim(self) -> int:
        return 2 * self.micro_dim


def maximally_mixed_sector(outcome: int, micro_dim: int) -> DensityOperator:
    """I / d_M on pointer sector `outcome` (1 or 2), zero elsewhere."""
    if outcome not in (1, 2):
        raise ValueError(f"outcome must be 1 or 2, got {outcome}")
    m = np.zeros((2 * micro_dim, 2 * micro_dim), dtype=np.complex128)
    lo = (outcome - 1) * micro_dim
    m[lo:lo + micro_dim, lo:lo + micro_dim] = np.eye(micro_dim) / micro_dim
    return DensityOperator(m, apparatus_layout(micro_dim))


def _check_sector_support(m: DensityOperator, outcome: int, micro_dim: int):
    t = m.matrix.reshape(2, micro_dim, 2, micro_dim)
    s = outcome - 1
    for i in range(2):
        for j in range(2):
            if i == s and j == s:
                continue
            dev = float(np.max(np.abs(t[i, :, j, :])))
            if dev > _BLOCK_TOL:
                raise ValueError(
                    f"pointer state for outcome {outcome} leaks outside its sector "
                    f"(block ({i},{j}) max {dev:.3e})")


def build_premeasurement_state(s: MeasurementScenario):
    """Entangled pure state alpha1 |s1>|a1> + alpha2 |s2>|a2>.

    The apparatus vectors |a_i> are Haar-random in the two opposite pointer
    sectors, drawn from the scenario's stream (sector 1 first).  Returns the
    StateVector and its projector on the S x P x M layout.
    """
    if s.rng is None:
        raise ValueError("scenario has no random stream attached")
    m1 = haar_random_state(s.micro_dim, s.rng).amplitudes
    m2 = haar_random_state(s.micro_dim, s.rng).amplitudes
    amp = np.zeros((2, 2, s.micro_dim), dtype=np.complex128)
    amp[0, 0, :] = s.alpha[0] * m1
    amp[1, 1, :] = s.alpha[1] * m2
    psi = StateVector(amp.reshape(-1), system_apparatus_layout(s.micro_dim))
    return psi, psi.projector()


def build_preselection_state(s: MeasurementScenario,
                             m1: DensityOperator | None = None,
                             m2: DensityOperator | None = None) -> DensityOperator:
    """Sector-diagonal mixture |a1|^2 P_s1 x M1 + |a2|^2 P_s2 x M2.

    M1 and M2 default to maximally mixed states on their sectors; supplied
    pointer states must be supported on the right sector to 1e-10.
    """
    if m1 is None:
        m1 = maximally_mixed_sector(1, s.micro_dim)
    if m2 is None:
        m2 = maximally_mixed_sector(2, s.micro_dim)
    for outcome, m in ((1, m1), (2, m2)):
        if m.dim != s.apparatus_dim:
            raise ValueError(f"pointer state dimension {m.dim} != apparatus {s.apparatus_dim}")
        _check_sector_support(m, outcome, s.micro_dim)
    p1 = abs(s.alpha[0]) ** 2
    p2 = abs(s.alpha[1]) ** 2
    d = s.apparatus_dim
    out = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    out[:d, :d] = p1 * m1.matrix
    out[d:, d:] = p2 * m2.matrix
    return DensityOperator(out, system_apparatus_layout(s.micro_dim))


def postselect(rho_bar: DensityOperator, outcome: int):
    """Read off one outcome branch of a sector-diagonal S x A state.

    Returns (probability, normalized branch state |s_i><s_i| x M_i).  The
    input must carry no S-coherence (off-diagonal system blocks <= 1e-10),
    and an outcome with probability below 1e-12 is degenerate.
    """
    if outcome not in (1, 2):
        raise ValueError(f"outcome must be 1 or 2, got {outcome}")
    d = rho_bar.dim // 2
    m = rho_bar.matrix
    off = max(float(np.max(np.abs(m[:d, d:]))), float(np.max(np.abs(m[d:, :d]))))
    if off > _BLOCK_TOL:
        raise ValueError(f"state has system coherences (max {off:.3e}), not a pre-selection form")
    lo = (outcome - 1) * d
    block = m[lo:lo + d, lo:lo + d]
    p = float(np.trace(block).real)
    if p < 1e-12:
        raise DegenerateOutcomeError(f"outcome {outcome} has probability {p!r}")
    out = np.zeros_like(m)
    out[lo:lo + d, lo:lo + d] = block / p
    return p, DensityOperator(out, rho_bar.layout)


@dataclass(frozen=True)
class PointerSuperpositionSpec:
    """Amplitude tables over the micro bases of the two pointer sectors."""

    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=np.complex128).reshape(-1)
        b = np.asarray(self.betas, dtype=np.complex128).reshape(-1)
        if a.size != b.size or a.size < 1:
            raise ValueError("alpha and beta tables must have equal positive length")
        nrm = float(np.sum(np.abs(a) ** 2) + np.sum(np.abs(b) ** 2))
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"amplitude tables have total weight {nrm!r}, must be 1")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas", b)

    @property
    def micro_dim(self) -> int:
        return self.alphas.size


def build_pointer_superposition(spec: PointerSuperpositionSpec) -> StateVector:
    """Pure apparatus state sum_u alpha_u |1;u> + sum_v beta_v |2;v>."""
    amp = np.concatenate([spec.alphas, spec.betas])
    return StateVector(amp, apparatus_layout(spec.micro_dim))


def dephased_pointer_mixture(spec: PointerSuperpositionSpec) -> DensityOperator:
    """Fully dephased limit: the diagonal mixture of sector basis states."""
    probs = np.concatenate([np.abs(spec.alphas) ** 2, np.abs(spec.betas) ** 2])
    return DensityOperator(np.diag(probs.astype(np.complex128)), apparatus_layout(spec.micro_dim))


def dephase_pointer_superposition(xi: StateVector, n: int, rng: RngStream) -> DensityOperator:
    """Average of n uniform-random-phase copies of |xi><xi|.

    Each realization multiplies every basis amplitude by an independent
    uniform phase; the empirical average keeps the diagonal exactly and
    suppresses each off-diagonal entry at the 1/sqrt(n) Monte Carlo rate,
    approaching the fully dephased mixture.
    """
    if n < 1:
        raise ValueError("need at least one realization")
    d = xi.dim
    g = rng.generator
    theta = g.uniform(0.0, 2.0 * np.pi, size=(n, d))
    z = np.exp(1j * theta)
    damp = (z.T @ z.conj()) / n  # mean_k z_ka z_kb^*
    np.fill_diagonal(damp, 1.0)  # exact unit modulus on the diagonal
    m = np.outer(xi.amplitudes, xi.amplitudes.conj()) * damp
    return DensityOperator((m + m.conj().T) / 2.0, xi.layout)


def epr_layout(micro_dim: int) -> SubsystemLayout:
    return SubsystemLayout(
        (("S1", 2), ("S2", 2), ("P", 2), ("M", micro_dim)),
        {"P": ROLE_POINTER, "M": ROLE_MICRO})


def build_epr_scenario(measured: int, micro_dim: int, rng: RngStream):
    """Singlet pair plus the pre-selection state of measuring one spin.

    Returns (singlet on S1 x S2, preselection on S1 x S2 x P x M).  The
    apparatus couples to the chosen particle exactly as the single-system
    builders do: each branch pairs opposite spins with a Haar-random pointer
    state in its own sector, weight 1/2 each.  Pointer sector k records the
    branch in which the unmeasured spin is found in basis state k-1, so for
    measured = 2 the first branch is |+>_1 |->_2 with sector-1 pointer.
    """
    if measured not in (1, 2):
        raise ValueError(f"measured particle must be 1 or 2, got {measured}")
    if micro_dim < 1:
        raise ValueError("micro dimension must be >= 1")
    v = np.zeros(4, dtype=np.complex128)
    v[1] = 1.0 / np.sqrt(2.0)   # |+ ->
    v[2] = -1.0 / np.sqrt(2.0)  # |- +>
    singlet_layout = SubsystemLayout((("S1", 2), ("S2", 2)))
    singlet = StateVector(v, singlet_layout).projector()

    m1 = haar_random_state(micro_dim, rng).amplitudes
    m2 = haar_random_state(micro_dim, rng).amplitudes
    pointer = []
    for k, mk in ((1, m1), (2, m2)):
        vec = np.zeros(2 * micro_dim, dtype=np.complex128)
        vec[(k - 1) * micro_dim:k * micro_dim] = mk
        pointer.append(np.outer(vec, vec.conj()))

    def proj(idx):
        p = np.zeros((2, 2), dtype=np.complex128)
        p[idx, idx] = 1.0
        return p

    out = np.zeros((8 * micro_dim, 8 * micro_dim), dtype=np.complex128)
    for k in (1, 2):
        unmeasured_state = k - 1          # sector k tracks the unmeasured spin
        measured_state = 1 - unmeasured_state
        if measured == 2:
            s1, s2 = unmeasured_state, measured_state
        else:
            s1, s2 = measured_state, unmeasured_state
        out += 0.5 * np.kron(np.kron(proj(s1), proj(s2)), pointer[k - 1])
    return singlet, DensityOperator(out, epr_layout(micro_dim))
