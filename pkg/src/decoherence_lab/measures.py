"""Entropic and algebraic correlation measures on density operators.

All entropies are natural-log (nats).  Relative-entropy style quantities are
returned as MeasureValue so a support violation can be reported as a
non-finite result instead of an exception; everything that is always finite
comes back as a plain float.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum_core import (
    PSD_TOL,
    SUPPORT_RTOL,
    DensityOperator,
    SubsystemLayout,
    hermitian_eig,
    partial_trace,
)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)


@dataclass(frozen=True)
class MeasureValue:
    """A scalar measure in nats; finite=False marks a support violation."""

    value: float
    finite: bool = True

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class BipartiteSplit:
    """Partition of a layout's factors into two non-empty sides."""

    side_a: tuple[str, ...]
    side_b: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "side_a", tuple(self.side_a))
        object.__setattr__(self, "side_b", tuple(self.side_b))
        if not self.side_a or not self.side_b:
            raise ValueError("both sides of a split must be non-empty")
        if set(self.side_a) & set(self.side_b):
            raise ValueError("split sides overlap")

    @classmethod
    def of(cls, layout: SubsystemLayout, side_a) -> "BipartiteSplit":
        """Split with side_a as given and side_b the complement, layout order."""
        side_a = tuple(side_a)
        rest = tuple(n for n in layout.names if n not in side_a)
        return cls(side_a, rest)

    def validate(self, layout: SubsystemLayout):
        union = set(self.side_a) | set(self.side_b)
        if union != set(layout.names):
            raise ValueError(
                f"split {self.side_a}|{self.side_b} does not partition {layout.names}")

    def dims(self, layout: SubsystemLayout) -> tuple[int, int]:
        da = int(np.prod([layout.dim_of(n) for n in self.side_a], dtype=np.int64))
        db = int(np.prod([layout.dim_of(n) for n in self.side_b], dtype=np.int64))
        return da, db


# ---------------------------------------------------------------------------
# norms


def trace_norm(m) -> float:
    a = m.matrix if hasattr(m, "matrix") else np.asarray(m)
    return float(np.linalg.svd(a, compute_uv=False).sum())


def trace_distance(a, b) -> float:
    """Half the trace norm of the difference."""
    ma = a.matrix if hasattr(a, "matrix") else np.asarray(a)
    mb = b.matrix if hasattr(b, "matrix") else np.asarray(b)
    return 0.5 * trace_norm(ma - mb)


# ---------------------------------------------------------------------------
# entropies


def von_neumann_entropy(rho) -> float:
    """-sum lambda ln lambda over the spectrum's support, in nats."""
    w, _ = hermitian_eig(rho)
    cut = SUPPORT_RTOL * max(float(w[-1]), 0.0)
    w = w[w > cut]
    return float(-np.sum(w * np.log(w))) if w.size else 0.0


def quantum_relative_entropy(rho, sigma) -> MeasureValue:
    """Tr(rho ln rho) - Tr(rho ln sigma) in nats.

    Finite exactly when the support of rho sits inside the support of
    sigma; the containment is checked by projecting rho onto sigma's
    kernel eigenprojector at the relative support cutoff.  A violation
    returns MeasureValue(inf, finite=False).
    """
    mr = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)
    ms = sigma.matrix if hasattr(sigma, "matrix") else np.asarray(sigma)
    if mr.shape != ms.shape:
        raise ValueError(f"shape mismatch {mr.shape} vs {ms.shape}")
    ws, vs = hermitian_eig(sigma)
    cut = SUPPORT_RTOL * max(float(ws[-1]), 0.0)
    # weight of rho on sigma's kernel
    diag = np.einsum("ij,jk,ki->i", vs.conj().T, mr, vs).real
    kernel_mass = float(np.sum(diag[ws <= cut]))
    if kernel_mass > 1e-10:
        return MeasureValue(float("inf"), finite=False)
    wr, _ = hermitian_eig(rho)
    cut_r = SUPPORT_RTOL * max(float(wr[-1]), 0.0)
    wr = wr[wr > cut_r]
    tr_rho_ln_rho = float(np.sum(wr * np.log(wr))) if wr.size else 0.0
    on = ws > cut
    tr_rho_ln_sigma = float(np.sum(diag[on] * np.log(ws[on])))
    return MeasureValue(tr_rho_ln_rho - tr_rho_ln_sigma)


def mutual_information(rho: DensityOperator, split: BipartiteSplit) -> float:
    """S(rho_A) + S(rho_B) - S(rho_AB); equals S(rho || rho_A x rho_B)."""
    split.validate(rho.layout)
    sa = von_neumann_entropy(partial_trace(rho, split.side_a))
    sb = von_neumann_entropy(partial_trace(rho, split.side_b))
    return sa + sb - von_neumann_entropy(rho)


# ---------------------------------------------------------------------------
# entanglement witnesses


def partial_transpose(rho: DensityOperator, split: BipartiteSplit) -> np.ndarray:
    """Transpose the side_b factors; Hermitian but possibly non-positive."""
    split.validate(rho.layout)
    dims = rho.layout.dims
    k = len(dims)
    b_pos = rho.layout.positions(split.side_b)
    t = rho.matrix.reshape(dims + dims)
    perm = list(range(2 * k))
    for p in b_pos:
        perm[p], perm[p + k] = perm[p + k], perm[p]
    return t.transpose(perm).reshape(rho.dim, rho.dim)


def negativity(rho: DensityOperator, split: BipartiteSplit) -> float:
    """Sum of |negative eigenvalues| of the partial transpose."""
    w = np.linalg.eigvalsh(partial_transpose(rho, split))
    return float(-np.sum(w[w < 0.0]))


def ppt_check(rho: DensityOperator, split: BipartiteSplit) -> bool:
    """True when the partial transpose has no eigenvalue below -1e-10."""
    w = np.linalg.eigvalsh(partial_transpose(rho, split))
    return bool(w[0] >= -PSD_TOL)


def coherence_block_norm(rho: DensityOperator, factor: str, i: int, j: int) -> float:
    """Trace norm of the <i| rho |j> block over one factor's basis.

    The block acts on the remaining factors; i and j must differ, since the
    diagonal blocks are populations rather than coherences.
    """
    if i == j:
        raise ValueError("coherence block needs two distinct basis indices")
    pos = rho.layout.index(factor)
    d = rho.layout.dims[pos]
    if not (0 <= i < d and 0 <= j < d):
        raise ValueError(f"indices ({i}, {j}) out of range for dimension {d}")
    dims = rho.layout.dims
    k = len(dims)
    t = rho.matrix.reshape(dims + dims)
    block = np.take(np.take(t, i, axis=pos), j, axis=pos + k - 1)
    rest = rho.dim // d
    return trace_norm(block.reshape(rest, rest))


def chsh_max(rho: DensityOperator) -> float:
    """Largest CHSH expectation over measurement settings for a 2x2 state.

    Computed from the correlation matrix T_ij = Tr(rho sigma_i x sigma_j)
    as 2*sqrt(t1 + t2) with t1 >= t2 the top eigenvalues of T^T T.
    """
    if rho.layout.dims != (2, 2):
        raise ValueError(f"chsh_max needs a two-qubit layout, got dims {rho.layout.dims}")
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    t = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            t[a, b] = float(np.trace(rho.matrix @ np.kron(paulis[a], paulis[b])).real)
    ev = np.linalg.eigvalsh(t.T @ t)
    return float(2.0 * np.sqrt(ev[-1] + ev[-2]))


def pointer_distinguishability(m1: DensityOperator, m2: DensityOperator) -> MeasureValue:
    """Symmetrized relative entropy (S(m1||m2) + S(m2||m1)) / 2.

    Non-finite whenever either direction has a support violation; the two
    one-sided values are available directly from quantum_relative_entropy.
    """
    fwd = quantum_relative_entropy(m1, m2)
    bwd = quantum_relative_entropy(m2, m1)
    if not (fwd.finite and bwd.finite):
        return MeasureValue(float("inf"), finite=False)
    return MeasureValue(0.5 * (fwd.value + bwd.value))
