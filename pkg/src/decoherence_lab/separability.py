"""Closest separable state by Frank-Wolfe over product-state ensembles.

The solved problem is min_sigma -Tr(rho ln sigma) over the separable set of
a bipartite split; subtracting the constant Tr(rho ln rho) makes the optimum
the relative entropy of entanglement.  Iterates are kept as explicit convex
combinations of pure product states, so the reported closest state is
separable by construction and comes with its own ensemble certificate.

The linear subproblem (best product state against the current gradient) is
non-convex; it is attacked by alternating extremal-eigenvector iteration
from several random starts, which is exact in the rank-one directions the
outer loop needs in practice.  The Frank-Wolfe duality gap is therefore a
certificate only as good as the inner oracle, which is why it is re-evaluated
once more at the final iterate before being reported.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .measures import BipartiteSplit, mutual_information, quantum_relative_entropy
from .quantum_core import (
    ROLE_SYSTEM,
    CapacityError,
    DensityOperator,
    RngStream,
    StateVector,
    SubsystemLayout,
    matrix_to_entries,
    partial_trace,
    reorder_factors,
)

_WEIGHT_TOL = 1e-10
_DROP_WEIGHT = 1e-14
_MERGE_FIDELITY = 1.0 - 1e-10


def _absorb_entry(entries: list, weight: float, x: np.ndarray, y: np.ndarray):
    """Fold a new product atom into a near-identical existing one (the
    vertex oracle revisits the same atoms as it converges), else append."""
    for k, (w, xx, yy) in enumerate(entries):
        if (abs(np.vdot(xx, x)) ** 2) * (abs(np.vdot(yy, y)) ** 2) >= _MERGE_FIDELITY:
            entries[k] = (w + weight, xx, yy)
            return
    entries.append((weight, x, y))


@dataclass(frozen=True)
class SolverSettings:
    """Knobs for closest_separable.

    ensemble_size None means the Caratheodory budget (d_A * d_B)^2.  The
    regularization eps keeps ln sigma defined on full rank throughout; it
    perturbs the reported value by O(eps ln d), far below gap_tol.
    """

    ensemble_size: int | None = None
    max_iterations: int = 400
    gap_tol: float = 1e-4
    inner_restarts: int = 8
    regularization: float = 1e-9
    rng: RngStream = field(default_factory=lambda: RngStream(0, 0))
    max_dim: int = 64

    def __post_init__(self):
        if self.max_iterations < 1 or self.inner_restarts < 1:
            raise ValueError("iteration and restart budgets must be positive")
        if not (0.0 < self.regularization < 1e-3):
            raise ValueError(f"regularization {self.regularization} out of range")
        if self.gap_tol <= 0.0:
            raise ValueError("gap_tol must be positive")


@dataclass(frozen=True)
class ProductEnsemble:
    """Convex combination sum_k w_k |x_k><x_k| x |y_k><y_k| across a split.

    Component vectors live on the split-ordered sides (side_a factors then
    side_b factors); assemble_ensemble_state returns the state in the
    original factor order of `layout`.
    """

    layout: SubsystemLayout
    split: BipartiteSplit
    entries: tuple

    def __post_init__(self):
        self.split.validate(self.layout)
        da, db = self.split.dims(self.layout)
        clean = []
        total = 0.0
        for w, x, y in self.entries:
            w = float(w)
            x = np.asarray(x, dtype=np.complex128).reshape(-1)
            y = np.asarray(y, dtype=np.complex128).reshape(-1)
            if w < -_WEIGHT_TOL:
                raise ValueError(f"negative ensemble weight {w}")
            if x.size != da or y.size != db:
                raise ValueError(f"component dims ({x.size}, {y.size}) != split dims ({da}, {db})")
            for v in (x, y):
                if abs(np.linalg.norm(v) - 1.0) > _WEIGHT_TOL:
                    raise ValueError("ensemble component vectors must be normalized")
            total += w
            clean.append((w, x, y))
        if not clean:
            raise ValueError("ensemble needs at least one entry")
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"ensemble weights sum to {total!r}, not 1")
        object.__setattr__(self, "entries", tuple(clean))

    def __len__(self) -> int:
        return len(self.entries)


def _split_order_layout(layout: SubsystemLayout, split: BipartiteSplit) -> SubsystemLayout:
    order = tuple(split.side_a) + tuple(split.side_b)
    facs = tuple(layout.factors[layout.index(n)] for n in order)
    return SubsystemLayout(facs, dict(layout.roles))


def assemble_ensemble_state(ensemble: ProductEnsemble) -> DensityOperator:
    """Sum of weighted product projectors, in the layout's factor order."""
    da, db = ensemble.split.dims(ensemble.layout)
    d = da * db
    m = np.zeros((d, d), dtype=np.complex128)
    for w, x, y in ensemble.entries:
        v = np.kron(x, y)
        m += w * np.outer(v, v.conj())
    m = (m + m.conj().T) / 2.0
    rho = DensityOperator(m / float(np.trace(m).real), _split_order_layout(ensemble.layout, ensemble.split))
    return reorder_factors(rho, ensemble.layout.names)


# ---------------------------------------------------------------------------
# objective pieces


def _f_value(R: np.ndarray, sigma: np.ndarray, eps: float) -> float:
    """-Tr(R ln sigma_eps) with sigma_eps = (1-eps) sigma + eps I/d."""
    d = sigma.shape[0]
    sig = (1.0 - eps) * sigma + (eps / d) * np.eye(d)
    w, v = np.linalg.eigh(sig)
    diag = np.einsum("ij,jk,ki->i", v.conj().T, R, v).real
    return float(-np.sum(diag * np.log(w)))


def _f_and_gradient(R: np.ndarray, sigma: np.ndarray, eps: float):
    """Objective and its Hermitian gradient at the regularized sigma.

    In sigma's eigenbasis the gradient is -(1-eps) * phi o rho_tilde with
    phi the divided differences of ln on the eigenvalues (1/lambda on the
    diagonal), the standard Daleckii-Krein form.
    """
    d = sigma.shape[0]
    sig = (1.0 - eps) * sigma + (eps / d) * np.eye(d)
    w, v = np.linalg.eigh(sig)
    lw = np.log(w)
    rt = v.conj().T @ R @ v
    f = float(-np.sum(np.diag(rt).real * lw))
    dw = w[:, None] - w[None, :]
    sw = w[:, None] + w[None, :]
    near = np.abs(dw) <= 1e-8 * sw
    phi = np.where(near, 2.0 / sw, (lw[:, None] - lw[None, :]) / np.where(near, 1.0, dw))
    grad = -(1.0 - eps) * (v @ (phi * rt) @ v.conj().T)
    return f, (grad + grad.conj().T) / 2.0


def _min_product_state(grad: np.ndarray, da: int, db: int, restarts: int,
                       gen: np.random.Generator, warm=(), alt_iters: int = 80):
    """Best product state against the gradient: min <x y|grad|x y>.

    Alternating smallest-eigenvector updates on the two sides.  Starts are
    tried in a fixed order -- current ensemble atoms, then the side-A basis
    vectors, then `restarts` random draws -- and a candidate replaces the
    best only on strict improvement, so degenerate minimizing faces resolve
    to the same atoms every call instead of wandering over the face.
    """
    gt = grad.reshape(da, db, da, db)
    starts = [np.asarray(x, dtype=np.complex128) for x, _ in warm]
    starts += [np.eye(da, dtype=np.complex128)[a] for a in range(da)]
    for _ in range(restarts):
        x = gen.standard_normal(da) + 1j * gen.standard_normal(da)
        starts.append(x / np.linalg.norm(x))
    best = None
    for x in starts:
        val = prev = math.inf
        y = None
        for _ in range(alt_iters):
            mx = np.einsum("a,acbd,b->cd", x.conj(), gt, x)
            wy, vy = np.linalg.eigh((mx + mx.conj().T) / 2.0)
            y = vy[:, 0]
            my = np.einsum("c,acbd,d->ab", y.conj(), gt, y)
            wx, vx = np.linalg.eigh((my + my.conj().T) / 2.0)
            x = vx[:, 0]
            val = float(wx[0])
            if prev - val < 1e-13 * (1.0 + abs(val)):
                break
            prev = val
        if best is None or val < best[2] - 1e-12:
            best = (x, y, val)
    return best


def _trace_prod(a: np.ndarray, b: np.ndarray) -> float:
    # Tr(ab) for hermitian a, b without forming the product
    return float(np.sum(a * b.T).real)


def _product_value(grad: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    v = np.kron(x, y)
    return float(np.vdot(v, grad @ v).real)


def _golden_section(g, tol: float = 1e-7):
    """Minimize a unimodal g on [0, 1] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    gamma = (a + b) / 2.0
    return gamma, g(gamma)


def _initial_entries(rho_split: DensityOperator, split: BipartiteSplit):
    """Pinch-of-the-system start when one side is exactly the tagged system
    factor, otherwise the maximally mixed product ensemble."""
    layout = rho_split.layout
    da, db = split.dims(layout)
    tagged = layout.factors_with_role(ROLE_SYSTEM)
    sys_side = None
    if len(tagged) == 1:
        if split.side_a == (tagged[0],):
            sys_side = "a"
        elif split.side_b == (tagged[0],):
            sys_side = "b"
    if sys_side is not None:
        # rho_split is ordered (side_a, side_b); pinch blocks are the
        # diagonal system blocks, eigendecomposed on the other side
        ds, do = (da, db) if sys_side == "a" else (db, da)
        t = rho_split.matrix.reshape(da, db, da, db)
        entries = []
        for i in range(ds):
            block = t[i, :, i, :] if sys_side == "a" else t[:, i, :, i]
            p = float(np.trace(block).real)
            if p < 1e-14:
                continue
            w, v = np.linalg.eigh((block + block.conj().T) / 2.0)
            e = np.zeros(ds, dtype=np.complex128)
            e[i] = 1.0
            for k in range(do):
                if w[k] < 1e-14:
                    continue
                comp = v[:, k]
                if sys_side == "a":
                    entries.append((float(w[k]), e.copy(), comp))
                else:
                    entries.append((float(w[k]), comp, e.copy()))
        if entries:
            total = sum(w for w, _, _ in entries)
            return [(w / total, x, y) for w, x, y in entries]
    # maximally mixed fallback
    entries = []
    for i in range(da):
        ea = np.zeros(da, dtype=np.complex128)
        ea[i] = 1.0
        for j in range(db):
            eb = np.zeros(db, dtype=np.complex128)
            eb[j] = 1.0
            entries.append((1.0 / (da * db), ea, eb))
    return entries


def _sigma_from_entries(entries, da: int, db: int) -> np.ndarray:
    d = da * db
    p = np.empty((len(entries), d), dtype=np.complex128)
    w = np.empty(len(entries))
    for k, (wk, x, y) in enumerate(entries):
        p[k] = np.kron(x, y)
        w[k] = wk
    m = (w[:, None] * p).T @ p.conj()
    return (m + m.conj().T) / 2.0


@dataclass(frozen=True)
class SolverReport:
    """Outcome of closest_separable, JSON-serializable via to_dict."""

    closest_state: DensityOperator
    ensemble: ProductEnsemble
    ree: float
    gap: float
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "ree": self.ree,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "closest_state": {
                "dims": list(self.closest_state.layout.dims),
                "entries": matrix_to_entries(self.closest_state.matrix),
            },
            "ensemble": [
                {
                    "weight": w,
                    "x": matrix_to_entries(x.reshape(1, -1)),
                    "y": matrix_to_entries(y.reshape(1, -1)),
                }
                for w, x, y in self.ensemble.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def closest_separable(rho: DensityOperator, split: BipartiteSplit,
                      settings: SolverSettings | None = None) -> SolverReport:
    """Frank-Wolfe solve for the separable state closest to rho.

    Returns the best iterate with its product ensemble, the REE value
    S(rho || sigma*) evaluated on the eps-regularized sigma*, and the final
    duality gap; converged means the gap met settings.gap_tol.  States
    larger than settings.max_dim raise CapacityError.
    """
    if settings is None:
        settings = SolverSettings()
    split.validate(rho.layout)
    if rho.dim > settings.max_dim:
        raise CapacityError(f"state dimension {rho.dim} exceeds solver budget {settings.max_dim}")
    rho_split = reorder_factors(rho, tuple(split.side_a) + tuple(split.side_b))
    da, db = split.dims(rho.layout)
    d = da * db
    R = rho_split.matrix
    eps = settings.regularization
    cap = settings.ensemble_size if settings.ensemble_size is not None else (da * db) ** 2
    gen = RngStream(settings.rng.seed, settings.rng.stream).generator

    entries = _initial_entries(rho_split, split)
    sigma = _sigma_from_entries(entries, da, db)

    f_cur, grad = _f_and_gradient(R, sigma, eps)
    trace = [f_cur]
    gap = math.inf
    iterations = 0
    for iterations in range(1, settings.max_iterations + 1):
        x, y, val_fw = _min_product_state(grad, da, db, settings.inner_restarts,
                                          gen, warm=[(xx, yy) for _, xx, yy in entries])
        lin = _trace_prod(grad, sigma)
        gap = lin - val_fw
        if gap <= settings.gap_tol:
            break

        # away direction: drain the ensemble atom the gradient favors least;
        # plain vertex steps alone decay stale atoms only as prod(1-gamma_k)
        away_vals = [_product_value(grad, xx, yy) for _, xx, yy in entries]
        k_away = int(np.argmax(away_vals))
        w_away = entries[k_away][0]
        step = None
        if away_vals[k_away] - lin > gap and w_away < 1.0 - 1e-12:
            va = np.kron(entries[k_away][1], entries[k_away][2])
            pa = np.outer(va, va.conj())
            gmax = w_away / (1.0 - w_away)
            u_best, f_new = _golden_section(
                lambda u: _f_value(R, sigma + (u * gmax) * (sigma - pa), eps))
            if f_new < f_cur - 1e-15:
                step = ("away", u_best * gmax)
        if step is None:
            v = np.kron(x, y)
            proj = np.outer(v, v.conj())
            gamma, f_new = _golden_section(
                lambda g: _f_value(R, (1.0 - g) * sigma + g * proj, eps))
            if f_new >= f_cur - 1e-15:
                # no measurable descent in either direction
                break
            step = ("vertex", gamma)

        kind, gamma = step
        if kind == "vertex":
            entries = [(w * (1.0 - gamma), xx, yy) for w, xx, yy in entries]
            _absorb_entry(entries, gamma, x, y)
        else:
            entries = [
                (max(w * (1.0 + gamma) - (gamma if k == k_away else 0.0), 0.0),
                 xx, yy)
                for k, (w, xx, yy) in enumerate(entries)]
        entries = [e for e in entries if e[0] > _DROP_WEIGHT]
        if len(entries) > cap:
            # trim only vestigial mass; undoing a step would stall the solve
            entries.sort(key=lambda e: e[0], reverse=True)
            while len(entries) > cap and entries[-1][0] <= _WEIGHT_TOL:
                entries.pop()
        total = sum(w for w, _, _ in entries)
        entries = [(w / total, xx, yy) for w, xx, yy in entries]
        sigma = _sigma_from_entries(entries, da, db)
        f_cur, grad = _f_and_gradient(R, sigma, eps)
        trace.append(f_cur)

    # fresh certificate at the final iterate
    x, y, val_fw = _min_product_state(grad, da, db, settings.inner_restarts,
                                      gen, warm=[(xx, yy) for _, xx, yy in entries])
    gap = _trace_prod(grad, sigma) - val_fw

    ensemble = ProductEnsemble(rho.layout, split, tuple(entries))
    closest = assemble_ensemble_state(ensemble)
    sig_reg = (1.0 - eps) * closest.matrix + (eps / d) * np.eye(d)
    # closest is in original factor order; compare against rho directly
    rel = quantum_relative_entropy(rho.matrix, (sig_reg + sig_reg.conj().T) / 2.0)
    ree_val = max(rel.value, 0.0)
    return SolverReport(
        closest_state=closest,
        ensemble=ensemble,
        ree=ree_val,
        gap=gap,
        iterations=iterations,
        converged=bool(gap <= settings.gap_tol),
        objective_trace=tuple(trace),
    )


def ree(rho: DensityOperator, split: BipartiteSplit,
        settings: SolverSettings | None = None) -> float:
    """Relative entropy of entanglement estimate (upper bound within gap)."""
    return closest_separable(rho, split, settings).ree


def classical_correlation(rho: DensityOperator, split: BipartiteSplit,
                          settings: SolverSettings | None = None) -> float:
    """S(sigma* || sigma*_A x sigma*_B) for the solver's closest state."""
    report = closest_separable(rho, split, settings)
    return classical_correlation_of(report.closest_state, split)


def classical_correlation_of(sigma: DensityOperator, split: BipartiteSplit) -> float:
    """Relative entropy from a state to the product of its own marginals.

    Computed through the identity S(sigma || sigma_A x sigma_B) =
    S(sigma_A) + S(sigma_B) - S(sigma): the direct form's support check
    misfires when solver iterates carry near-zero eigenvalues (the product
    of the marginals then has O(eps^2) corners under sigma's O(eps) mass).
    """
    return max(mutual_information(sigma, split), 0.0)


def pure_state_oracle(psi, split: BipartiteSplit):
    """Exact closest separable state and REE for a pure state by Schmidt form.

    The closest separable state of a pure state is the diagonal mixture of
    its Schmidt product vectors with the squared coefficients as weights,
    and the REE is the Schmidt entropy -sum c_i^2 ln c_i^2.  Accepts a
    StateVector, or a DensityOperator that must be pure (argument error
    otherwise).
    """
    if isinstance(psi, DensityOperator):
        purity = float(np.trace(psi.matrix @ psi.matrix).real)
        if abs(purity - 1.0) > 1e-10:
            raise ValueError(f"oracle needs a pure state, got purity {purity!r}")
        w, v = np.linalg.eigh(psi.matrix)
        psi = StateVector(v[:, -1], psi.layout)
    split.validate(psi.layout)
    layout = psi.layout
    da, db = split.dims(layout)
    psi_split = reorder_factors(psi, tuple(split.side_a) + tuple(split.side_b))
    coeff = psi_split.amplitudes.reshape(da, db)
    u, s, vh = np.linalg.svd(coeff)
    probs = s ** 2
    entries = []
    ree_val = 0.0
    for k in range(min(da, db)):
        if probs[k] <= 1e-15:
            continue
        entries.append((float(probs[k]), u[:, k], vh[k]))
        ree_val -= float(probs[k] * np.log(probs[k]))
    total = sum(w for w, _, _ in entries)
    entries = [(w / total, x, y) for w, x, y in entries]
    ensemble = ProductEnsemble(layout, split, tuple(entries))
    return assemble_ensemble_state(ensemble), ree_val
