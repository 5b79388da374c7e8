"""Dense states and operators on labelled tensor factors.

Everything is plain numpy: state vectors are 1-d complex arrays, operators
are 2-d complex matrices, and the tensor structure is carried alongside by a
SubsystemLayout that names each factor.  All Hilbert spaces are finite and
dense, entropies elsewhere are natural-log, and hbar = 1 throughout.

Matrix serialization for debugging dumps is row-major lists of (re, im)
pairs, see matrix_to_entries / entries_to_matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# numerical contracts shared by the whole package
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
NORM_TOL = 1e-12
PSD_TOL = 1e-10
SUPPORT_RTOL = 1e-12
MAX_TOTAL_DIM = 4096

# role tags a layout may attach to factors
ROLE_SYSTEM = "system"
ROLE_POINTER = "pointer"
ROLE_MICRO = "micro"
ROLE_ENVIRONMENT = "environment"


class CapacityError(ValueError):
    """Requested construction exceeds the dense-dimension budget."""


_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass
class RngStream:
    """Deterministic random stream identified by a (seed, stream) pair.

    Two RngStream objects built from the same pair reproduce the same draw
    sequence.  derive(*key) hands out statistically independent child
    streams for sweep cells and seeds without sharing any mutable state;
    the child id is produced by numpy's SeedSequence mixing so the scheme
    is stable across platforms.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        self.seed = int(self.seed) & _U64
        self.stream = int(self.stream) & _U64
        self._generator = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
            self._generator = np.random.Generator(np.random.PCG64(ss))
        return self._generator

    def derive(self, *key: int) -> "RngStream":
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream, *key))
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered tensor factors (name, dim) with optional role tags.

    roles maps factor names to one of the ROLE_* tags; plain linear algebra
    ignores the tags, measurement-model code uses them to find the system
    or pointer factor.  An empty factor tuple is the scalar space (dim 1).
    """

    factors: tuple[tuple[str, int], ...]
    roles: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((str(n), int(d)) for n, d in self.factors))
        names = [n for n, _ in self.factors]
        if len(set(names)) != len(names):
            raise ValueError(f"factor names must be unique, got {names}")
        for n, d in self.factors:
            if d < 1:
                raise ValueError(f"factor {n!r} has non-positive dimension {d}")
        for n in self.roles:
            if n not in names:
                raise ValueError(f"role tag on unknown factor {n!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.factors):
            if n == name:
                return i
        raise ValueError(f"unknown factor {name!r}, have {self.names}")

    def dim_of(self, name: str) -> int:
        return self.factors[self.index(name)][1]

    def positions(self, names) -> tuple[int, ...]:
        return tuple(self.index(n) for n in names)

    def restricted(self, keep) -> "SubsystemLayout":
        """Layout of the kept factors, in the original factor order."""
        keep = set(keep)
        for n in keep:
            self.index(n)  # raises on unknown names
        facs = tuple(f for f in self.factors if f[0] in keep)
        roles = {n: r for n, r in self.roles.items() if n in keep}
        return SubsystemLayout(facs, roles)

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        clash = set(self.names) & set(other.names)
        if clash:
            raise ValueError(f"factor name clash on concat: {sorted(clash)}")
        return SubsystemLayout(self.factors + other.factors, {**self.roles, **other.roles})

    def factors_with_role(self, role: str) -> tuple[str, ...]:
        return tuple(n for n, _ in self.factors if self.roles.get(n) == role)


def _as_complex_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _check_hermitian(m: np.ndarray, what: str, tol: float = HERMITICITY_TOL):
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise ValueError(f"{what} is not Hermitian: max |m - m^dag| = {dev:.3e} > {tol:g}")


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on the factors of `layout`."""

    amplitudes: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1).copy()
        if a.size != self.layout.dim:
            raise ValueError(
                f"amplitude length {a.size} does not match layout dimension {self.layout.dim}")
        nrm2 = float(np.vdot(a, a).real)
        if abs(nrm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state norm^2 = {nrm2!r} deviates from 1 beyond {NORM_TOL:g}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.layout)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive-semidefinite matrix on `layout`.

    Positivity is enforced up to an eigenvalue floor of -1e-10 so states
    assembled from long floating-point pipelines still validate.
    """

    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix).copy()
        if m.shape[0] != self.layout.dim:
            raise ValueError(
                f"matrix dimension {m.shape[0]} does not match layout dimension {self.layout.dim}")
        _check_hermitian(m, "density matrix")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace = {tr!r} deviates from 1 beyond {TRACE_TOL:g}")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -PSD_TOL:
            raise ValueError(f"matrix has negative eigenvalue {lo:.3e} < -{PSD_TOL:g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix on `layout`, with a cached eigendecomposition."""

    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix).copy()
        if m.shape[0] != self.layout.dim:
            raise ValueError(
                f"matrix dimension {m.shape[0]} does not match layout dimension {self.layout.dim}")
        _check_hermitian(m, "operator")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_eig", None)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eig(self):
        """(eigenvalues ascending, orthonormal eigenvector columns), computed once."""
        if self._eig is None:
            w, v = np.linalg.eigh(self.matrix)
            w.setflags(write=False)
            v.setflags(write=False)
            object.__setattr__(self, "_eig", (w, v))
        return self._eig


# ---------------------------------------------------------------------------
# constructions


def tensor_product(a, b, max_dim: int = MAX_TOTAL_DIM):
    """Kronecker product of two states or two density operators.

    Layouts concatenate left-to-right; the combined dimension is checked
    against `max_dim` (default 4096) and a CapacityError is raised beyond it.
    """
    total = a.layout.dim * b.layout.dim
    if total > max_dim:
        raise CapacityError(f"combined dimension {total} exceeds budget {max_dim}")
    layout = a.layout.concat(b.layout)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), layout)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), layout)
    raise ValueError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Trace out every factor not named in `keep`.

    Kept factors stay in their original order.  Tracing out everything
    returns the scalar unit operator on an empty layout.
    """
    keep = list(keep)
    keep_pos = set(rho.layout.positions(keep))
    dims = rho.layout.dims
    k = len(dims)
    t = rho.matrix.reshape(dims + dims)
    nleft = k
    for pos in sorted(set(range(k)) - keep_pos, reverse=True):
        t = np.trace(t, axis1=pos, axis2=pos + nleft)
        nleft -= 1
    d = int(np.prod([dims[p] for p in sorted(keep_pos)], dtype=np.int64)) if keep_pos else 1
    return DensityOperator(t.reshape(d, d), rho.layout.restricted(keep))


def reduced_density(psi: StateVector, keep) -> DensityOperator:
    """Partial trace of |psi><psi| without forming the full projector.

    Same result as partial_trace on the projector, but memory stays
    O(dim) + O(dim_keep^2), which matters for large environments.
    """
    keep = list(keep)
    keep_pos = sorted(set(psi.layout.positions(keep)))
    dims = psi.layout.dims
    k = len(dims)
    rest = [i for i in range(k) if i not in keep_pos]
    a = psi.amplitudes.reshape(dims if dims else (1,))
    a = np.transpose(a, keep_pos + rest) if dims else a
    d_keep = int(np.prod([dims[i] for i in keep_pos], dtype=np.int64)) if keep_pos else 1
    mat = a.reshape(d_keep, -1)
    return DensityOperator(mat @ mat.conj().T, psi.layout.restricted(keep))


def reorder_factors(x, order):
    """Permute tensor factors of a state or density operator into `order`."""
    layout = x.layout
    perm = list(layout.positions(order))
    if sorted(perm) != list(range(len(layout.factors))):
        raise ValueError(f"order {order!r} is not a permutation of {layout.names}")
    dims = layout.dims
    new_layout = SubsystemLayout(
        tuple(layout.factors[p] for p in perm),
        {n: r for n, r in layout.roles.items()})
    if isinstance(x, StateVector):
        a = x.amplitudes.reshape(dims).transpose(perm).reshape(-1)
        return StateVector(a, new_layout)
    if isinstance(x, DensityOperator):
        k = len(dims)
        t = x.matrix.reshape(dims + dims)
        t = t.transpose(perm + [p + k for p in perm])
        return DensityOperator(t.reshape(x.dim, x.dim), new_layout)
    raise ValueError(f"cannot reorder {type(x).__name__}")


def pinch(rho: DensityOperator, factor: str) -> DensityOperator:
    """Project away coherences between basis indices of one factor.

    Keeps the blocks diagonal in `factor` and zeroes every cross block;
    this is the dephasing map of that factor's computational basis.
    """
    pos = rho.layout.index(factor)
    dims = rho.layout.dims
    k = len(dims)
    t = rho.matrix.reshape(dims + dims).copy()
    idx_row = np.arange(dims[pos])
    # zero blocks with differing factor index on row/column sides
    t = np.moveaxis(np.moveaxis(t, pos, 0), pos + k, 1)
    mask = np.zeros((dims[pos], dims[pos]), dtype=bool)
    mask[idx_row, idx_row] = True
    t[~mask] = 0.0
    t = np.moveaxis(np.moveaxis(t, 1, pos + k), 0, pos)
    return DensityOperator(t.reshape(rho.dim, rho.dim), rho.layout)


# ---------------------------------------------------------------------------
# spectral operations


def hermitian_eig(h):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian input.

    Accepts HermitianOperator, DensityOperator, or a bare matrix; the
    Hermiticity of bare matrices is checked to the shared 1e-12 tolerance.
    """
    if isinstance(h, HermitianOperator):
        return h.eig()
    if isinstance(h, DensityOperator):
        return np.linalg.eigh(h.matrix)
    m = _as_complex_matrix(h)
    _check_hermitian(m, "matrix")
    return np.linalg.eigh(m)


def matrix_function_hermitian(h, fn: str) -> np.ndarray:
    """Apply log or exp to a Hermitian matrix through its eigendecomposition.

    fn='log' demands positive semidefiniteness: eigenvalues below the
    relative support cutoff count as exact zeros and are excluded (the
    result acts as log on the support only); eigenvalues below -1e-10
    raise a domain ValueError.
    """
    w, v = hermitian_eig(h)
    if fn == "exp":
        fw = np.exp(w)
    elif fn == "log":
        if w[0] < -PSD_TOL:
            raise ValueError(f"log of non-PSD matrix, eigenvalue {w[0]:.3e}")
        cut = SUPPORT_RTOL * max(float(w[-1]), 0.0)
        fw = np.zeros_like(w)
        on = w > cut
        if cut > 0.0:
            fw[on] = np.log(w[on])
    else:
        raise ValueError(f"unsupported matrix function {fn!r}")
    return (v * fw) @ v.conj().T


def evolve(psi: StateVector, h: HermitianOperator, t: float) -> StateVector:
    """exp(-iHt)|psi> through the (cached) eigendecomposition of H.

    Reusing the same HermitianOperator across a time grid costs one
    diagonalization total.  The result is renormalized after a drift check
    (norm must already be preserved to 1e-10).
    """
    if h.dim != psi.dim:
        raise ValueError(f"operator dimension {h.dim} does not match state {psi.dim}")
    w, v = h.eig()
    coeff = v.conj().T @ psi.amplitudes
    out = v @ (np.exp(-1j * w * t) * coeff)
    nrm = float(np.linalg.norm(out))
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"evolution drifted norm to {nrm!r}")
    return StateVector(out / nrm, psi.layout)


# ---------------------------------------------------------------------------
# random draws


def haar_random_state(dim: int, rng: RngStream, layout: SubsystemLayout | None = None) -> StateVector:
    """Haar-distributed pure state: normalized iid complex Gaussian vector."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    g = rng.generator
    z = g.standard_normal(dim) + 1j * g.standard_normal(dim)
    z /= np.linalg.norm(z)
    if layout is None:
        layout = SubsystemLayout((("f0", dim),))
    return StateVector(z, layout)


def gue_sample(dim: int, scale: float, rng: RngStream,
               layout: SubsystemLayout | None = None) -> HermitianOperator:
    """GUE draw: diagonal entries real N(0, scale^2), off-diagonal complex
    with independent re/im parts of variance scale^2 / 2."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    g = rng.generator
    a = g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))
    h = scale * (a + a.conj().T) / 2.0
    if layout is None:
        layout = SubsystemLayout((("f0", dim),))
    return HermitianOperator(h, layout)


# ---------------------------------------------------------------------------
# serialization helpers (debug dumps, inline CLI matrices)


def matrix_to_entries(m: np.ndarray) -> list:
    """Row-major [re, im] pairs for a complex matrix."""
    a = np.asarray(m, dtype=np.complex128)
    return [[float(z.real), float(z.imag)] for z in a.reshape(-1)]


def entries_to_matrix(entries, shape) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    if flat.size != shape[0] * shape[1]:
        raise ValueError(f"{flat.size} entries cannot fill shape {tuple(shape)}")
    return flat.reshape(shape)
