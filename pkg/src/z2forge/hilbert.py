"""Finite-dimensional Hilbert spaces: truncated bosonic modes, qubits, and
operators on their tensor products.

All states and operators are defined over a :class:`SpaceLayout`, an ordered
tuple of factors that fixes the Kronecker ordering once and for all.  The
qubit basis is ordered (down, up), so ``sigma_z = diag(-1, +1)`` and the
Hadamard states are ``|+-> = (|up> +- |down>)/sqrt(2)``.

Truncated ladder operators keep the exact a^dag a spectrum: the raising
operator annihilates the top Fock state instead of wrapping around.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

# Below this total dimension operators are stored dense; above, CSR.
DENSE_CUTOFF = 64

HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-10


class LayoutError(ValueError):
    """Raised for malformed layouts or layout mismatches."""


@dataclass(frozen=True)
class ModeSpec:
    """A bosonic mode truncated at occupation ``n_max`` (dimension n_max+1)."""

    n_max: int
    label: str = "mode"

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"mode cutoff must be >= 1, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class QubitSpec:
    """A two-level system with basis ordered (down, up)."""

    label: str = "qubit"

    @property
    def dim(self) -> int:
        return 2


Factor = Union[ModeSpec, QubitSpec]


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor product of modes and qubits.

    Factor order is the canonical Kronecker order (factor 0 is the slowest
    index) for every state and operator built on this layout.
    """

    factors: tuple

    def __post_init__(self):
        if len(self.factors) == 0:
            raise LayoutError("layout needs at least one factor")
        for f in self.factors:
            if not isinstance(f, (ModeSpec, QubitSpec)):
                raise LayoutError(f"not a mode or qubit spec: {f!r}")

    @property
    def dims(self) -> tuple:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        out = 1
        for d in self.dims:
            out *= d
        return out

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    def is_mode(self, k: int) -> bool:
        return isinstance(self.factors[k], ModeSpec)

    def is_qubit(self, k: int) -> bool:
        return isinstance(self.factors[k], QubitSpec)

    def mode_indices(self) -> list:
        return [k for k in range(self.n_factors) if self.is_mode(k)]

    def qubit_indices(self) -> list:
        return [k for k in range(self.n_factors) if self.is_qubit(k)]


def compose_space(factors: Iterable[Factor]) -> SpaceLayout:
    """Build the canonical layout from an ordered factor list."""
    return SpaceLayout(tuple(factors))


# ----------------------------------------------------------------------
# States
# ----------------------------------------------------------------------

class StateVector:
    """Normalized complex amplitudes over a layout.

    The amplitude array is normalized on construction and marked read-only;
    a zero vector is rejected.
    """

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: SpaceLayout, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128).ravel()
        if amplitudes.shape[0] != layout.dim:
            raise LayoutError(
                f"amplitude length {amplitudes.shape[0]} != layout dim {layout.dim}"
            )
        nrm = np.linalg.norm(amplitudes)
        if nrm < 1e-14:
            raise ValueError("cannot normalize a zero state vector")
        amplitudes = amplitudes / nrm
        amplitudes.flags.writeable = False
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", amplitudes)

    def __setattr__(self, *_):
        raise AttributeError("StateVector is immutable")

    @property
    def dim(self) -> int:
        return self.layout.dim

    def overlap(self, other: "StateVector") -> complex:
        _check_same_layout(self.layout, other.layout)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


def _check_same_layout(a: SpaceLayout, b: SpaceLayout):
    if a.dims != b.dims:
        raise LayoutError(f"layout mismatch: dims {a.dims} vs {b.dims}")


# ----------------------------------------------------------------------
# Operators
# ----------------------------------------------------------------------

class LinearOperator:
    """Complex matrix over a layout, sparse (CSR) above ``DENSE_CUTOFF``.

    When ``hermitian=True`` is claimed the matrix is checked against its
    adjoint to 1e-12 (relative to the largest entry).
    """

    __slots__ = ("layout", "matrix", "hermitian")

    def __init__(self, layout: SpaceLayout, matrix, hermitian: bool = False):
        dim = layout.dim
        if matrix.shape != (dim, dim):
            raise LayoutError(f"matrix shape {matrix.shape} != ({dim}, {dim})")
        if sp.issparse(matrix):
            matrix = matrix.tocsr() if dim >= DENSE_CUTOFF else matrix.toarray()
        else:
            matrix = np.asarray(matrix, dtype=np.complex128)
            if dim >= DENSE_CUTOFF:
                matrix = sp.csr_matrix(matrix)
        if sp.issparse(matrix):
            matrix = matrix.astype(np.complex128)
        if hermitian:
            dev = _herm_deviation(matrix)
            scale = max(1.0, _abs_max(matrix))
            if dev > HERMITICITY_TOL * scale:
                raise ValueError(f"operator claimed Hermitian but |H - H^dag| = {dev:.3e}")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "hermitian", bool(hermitian))

    def __setattr__(self, *_):
        raise AttributeError("LinearOperator is immutable")

    @property
    def dim(self) -> int:
        return self.layout.dim

    def to_dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.array(m)

    def dag(self) -> "LinearOperator":
        return LinearOperator(self.layout, self.matrix.conj().T, hermitian=self.hermitian)

    def apply(self, psi: StateVector) -> np.ndarray:
        """Raw (unnormalized) action on a state's amplitudes."""
        _check_same_layout(self.layout, psi.layout)
        return np.asarray(self.matrix @ psi.amplitudes).ravel()

    # -- light algebra; results drop the hermitian claim unless obvious ----
    def __add__(self, other):
        if isinstance(other, LinearOperator):
            _check_same_layout(self.layout, other.layout)
            return LinearOperator(self.layout, self.matrix + other.matrix,
                                  hermitian=self.hermitian and other.hermitian)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, LinearOperator):
            _check_same_layout(self.layout, other.layout)
            return LinearOperator(self.layout, self.matrix - other.matrix,
                                  hermitian=self.hermitian and other.hermitian)
        return NotImplemented

    def __mul__(self, c):
        if isinstance(c, numbers.Number):
            herm = self.hermitian and abs(complex(c).imag) == 0.0
            return LinearOperator(self.layout, self.matrix * c, hermitian=herm)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            _check_same_layout(self.layout, other.layout)
            return LinearOperator(self.layout, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return self.apply(other)
        return NotImplemented

    def norm(self) -> float:
        """Frobenius norm."""
        m = self.matrix
        if sp.issparse(m):
            return float(np.sqrt(abs(m.multiply(m.conj())).sum()))
        return float(np.linalg.norm(m))


def _herm_deviation(m) -> float:
    d = m - m.conj().T
    if sp.issparse(d):
        return float(abs(d).max()) if d.nnz else 0.0
    return float(np.abs(d).max()) if d.size else 0.0


def _abs_max(m) -> float:
    if sp.issparse(m):
        return float(abs(m).max()) if m.nnz else 0.0
    return float(np.abs(m).max()) if m.size else 0.0


def commutator_norm(a: LinearOperator, b: LinearOperator) -> float:
    """Frobenius norm of [A, B]; the gauge-invariance figure of merit."""
    _check_same_layout(a.layout, b.layout)
    c = a.matrix @ b.matrix - b.matrix @ a.matrix
    if sp.issparse(c):
        return float(np.sqrt(abs(c.multiply(c.conj())).sum()))
    return float(np.linalg.norm(c))


# ----------------------------------------------------------------------
# Local building blocks and embedding
# ----------------------------------------------------------------------

def destroy_local(n_max: int) -> np.ndarray:
    """Truncated annihilation operator, a|n> = sqrt(n)|n-1>."""
    d = n_max + 1
    a = np.zeros((d, d), dtype=np.complex128)
    for n in range(1, d):
        a[n - 1, n] = np.sqrt(n)
    return a


def number_local(n_max: int) -> np.ndarray:
    return np.diag(np.arange(n_max + 1).astype(np.complex128))


def parity_local(n_max: int) -> np.ndarray:
    return np.diag(((-1.0) ** np.arange(n_max + 1)).astype(np.complex128))


# Qubit basis order (down, up).
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=np.complex128),
    "z": np.array([[-1, 0], [0, 1]], dtype=np.complex128),
}
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=np.complex128)   # |up><down|
SIGMA_MINUS = SIGMA_PLUS.T.copy()

QUBIT_KETS = {
    "down": np.array([1, 0], dtype=np.complex128),
    "up": np.array([0, 1], dtype=np.complex128),
    "+": np.array([1, 1], dtype=np.complex128) / np.sqrt(2),
    "-": np.array([-1, 1], dtype=np.complex128) / np.sqrt(2),
}
QUBIT_KETS["d"] = QUBIT_KETS["down"]
QUBIT_KETS["u"] = QUBIT_KETS["up"]


def embed(layout: SpaceLayout, local_ops: dict) -> LinearOperator:
    """Kronecker-embed local matrices, identities elsewhere.

    ``local_ops`` maps factor index -> local dense matrix.  The result uses
    the layout's storage convention (dense below DENSE_CUTOFF, CSR above).
    """
    for k in local_ops:
        if not 0 <= k < layout.n_factors:
            raise LayoutError(f"factor index {k} out of range")
    use_sparse = layout.dim >= DENSE_CUTOFF
    out = None
    for k, f in enumerate(layout.factors):
        if k in local_ops:
            block = np.asarray(local_ops[k], dtype=np.complex128)
            if block.shape != (f.dim, f.dim):
                raise LayoutError(f"local op at factor {k} has shape {block.shape}, "
                                  f"factor dim is {f.dim}")
        else:
            block = np.eye(f.dim, dtype=np.complex128)
        if use_sparse:
            block = sp.csr_matrix(block)
            out = block if out is None else sp.kron(out, block, format="csr")
        else:
            out = block if out is None else np.kron(out, block)
    return LinearOperator(layout, out)


def identity(layout: SpaceLayout) -> LinearOperator:
    if layout.dim >= DENSE_CUTOFF:
        return LinearOperator(layout, sp.identity(layout.dim, dtype=np.complex128,
                                                  format="csr"), hermitian=True)
    return LinearOperator(layout, np.eye(layout.dim, dtype=np.complex128), hermitian=True)


def annihilation(layout: SpaceLayout, factor: int) -> LinearOperator:
    """Embedded truncated annihilation operator for a mode factor."""
    if not layout.is_mode(factor):
        raise LayoutError(f"factor {factor} is not a bosonic mode")
    return embed(layout, {factor: destroy_local(layout.factors[factor].n_max)})


def creation(layout: SpaceLayout, factor: int) -> LinearOperator:
    if not layout.is_mode(factor):
        raise LayoutError(f"factor {factor} is not a bosonic mode")
    return embed(layout, {factor: destroy_local(layout.factors[factor].n_max).conj().T})


def number(layout: SpaceLayout, factor: int) -> LinearOperator:
    if not layout.is_mode(factor):
        raise LayoutError(f"factor {factor} is not a bosonic mode")
    return embed(layout, {factor: number_local(layout.factors[factor].n_max)})


def parity(layout: SpaceLayout, factor: int) -> LinearOperator:
    """Diagonal (-1)^n on one mode; building block of the Gauss generators."""
    if not layout.is_mode(factor):
        raise LayoutError(f"factor {factor} is not a bosonic mode")
    return embed(layout, {factor: parity_local(layout.factors[factor].n_max)})


def pauli(layout: SpaceLayout, factor: int, axis: str) -> LinearOperator:
    """Embedded Pauli matrix on a qubit factor; axis in {'x','y','z'}."""
    if not layout.is_qubit(factor):
        raise LayoutError(f"factor {factor} is not a qubit")
    if axis not in PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return embed(layout, {factor: PAULI[axis]})


def total_number(layout: SpaceLayout) -> LinearOperator:
    """Sum of a^dag a over every mode factor (assembled as a diagonal)."""
    diag = np.zeros(layout.dim)
    for k in layout.mode_indices():
        diag += _diag_embed(layout, k, np.arange(layout.factors[k].dim, dtype=float))
    diag = diag.astype(np.complex128)
    if layout.dim >= DENSE_CUTOFF:
        return LinearOperator(layout, sp.diags(diag, format="csr"), hermitian=True)
    return LinearOperator(layout, np.diag(diag), hermitian=True)


def _diag_embed(layout: SpaceLayout, k: int, local_diag: np.ndarray) -> np.ndarray:
    """Embed a local diagonal as a full-space diagonal by repetition."""
    left = 1
    for f in layout.factors[:k]:
        left *= f.dim
    right = 1
    for f in layout.factors[k + 1:]:
        right *= f.dim
    return np.tile(np.repeat(local_diag, right), left)


# ----------------------------------------------------------------------
# State construction and diagnostics
# ----------------------------------------------------------------------

def product_state(layout: SpaceLayout, kets: Sequence) -> StateVector:
    """Product state from per-factor kets.

    Modes take a Fock occupation (int <= n_max); qubits take one of
    'down'/'up'/'+'/'-' (or a length-2 amplitude pair).
    """
    if len(kets) != layout.n_factors:
        raise LayoutError(f"need {layout.n_factors} kets, got {len(kets)}")
    vec = np.array([1.0 + 0j])
    for f, ket in zip(layout.factors, kets):
        if isinstance(f, ModeSpec):
            if not isinstance(ket, numbers.Integral):
                raise ValueError(f"mode ket must be a Fock index, got {ket!r}")
            n = int(ket)
            if not 0 <= n <= f.n_max:
                raise ValueError(f"occupation {n} exceeds cutoff n_max={f.n_max}")
            local = np.zeros(f.dim, dtype=np.complex128)
            local[n] = 1.0
        else:
            if isinstance(ket, str):
                if ket not in QUBIT_KETS:
                    raise ValueError(f"unknown qubit ket {ket!r}")
                local = QUBIT_KETS[ket]
            else:
                local = np.asarray(ket, dtype=np.complex128)
                if local.shape != (2,):
                    raise ValueError(f"qubit ket must have 2 amplitudes, got {ket!r}")
        vec = np.kron(vec, local)
    return StateVector(layout, vec)


def expectation(psi: StateVector, op: LinearOperator) -> complex:
    """<psi|O|psi>."""
    return complex(np.vdot(psi.amplitudes, op.apply(psi)))


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """|<phi|psi>|^2."""
    return float(abs(psi.overlap(phi)) ** 2)


def entanglement_entropy(psi: StateVector, left_block: int) -> float:
    """Von Neumann entropy (nats) across the cut after ``left_block`` factors.

    Computed from the singular values of the reshaped amplitude matrix.
    """
    n = psi.layout.n_factors
    if not 0 < left_block < n:
        raise ValueError(f"bipartition must leave factors on both sides, got {left_block}/{n}")
    dims = psi.layout.dims
    dl = 1
    for d in dims[:left_block]:
        dl *= d
    mat = psi.amplitudes.reshape(dl, -1)
    s = np.linalg.svd(mat, compute_uv=False)
    p = s ** 2
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log(p)))
