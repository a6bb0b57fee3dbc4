"""Truncated Fock(mode 1) x Fock(mode 2) x qubit spaces and their operator algebra.

Basis ordering is fixed: mode 1 is the slowest index, the qubit the fastest,
so ``|n1, n2, s>`` sits at ``(n1 * (n_max_2 + 1) + n2) * 2 + s`` with
``s = 0`` for ``|g>`` and ``s = 1`` for ``|e>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

ORDERING = "n1,n2,qubit"

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
PSD_TOL = 1e-8
NORM_TOL = 1e-12


class SpecMismatchError(ValueError):
    """Raised when objects living on different Hilbert spaces are combined."""


def _ladder(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1,
                    shape=(n_max + 1, n_max + 1), format="csr", dtype=complex)


@dataclass(frozen=True)
class HilbertSpec:
    """Truncation of the composite two-mode plus qubit space."""

    n_max_1: int = 10
    n_max_2: int = 10
    ordering: str = ORDERING

    def __post_init__(self):
        for name in ("n_max_1", "n_max_2"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")
        if self.ordering != ORDERING:
            raise ValueError(f"unsupported ordering {self.ordering!r}")

    @property
    def dim(self) -> int:
        return 2 * (self.n_max_1 + 1) * (self.n_max_2 + 1)

    def index(self, n1: int, n2: int, s: int) -> int:
        if not (0 <= n1 <= self.n_max_1 and 0 <= n2 <= self.n_max_2 and s in (0, 1)):
            raise IndexError(f"|{n1},{n2},{s}> outside truncation {self}")
        return (n1 * (self.n_max_2 + 1) + n2) * 2 + s

    def label(self, i: int) -> tuple[int, int, int]:
        rest, s = divmod(i, 2)
        n1, n2 = divmod(rest, self.n_max_2 + 1)
        return n1, n2, s

    def labels(self) -> list[tuple[int, int, int]]:
        return [self.label(i) for i in range(self.dim)]

    def photon_numbers(self, mode: int) -> np.ndarray:
        _check_mode(mode)
        return np.array([lab[mode - 1] for lab in self.labels()], dtype=float)

    def excitation_numbers(self) -> np.ndarray:
        """Weighted excitation ``n1 + n2 + 2 s`` of every basis state."""
        labs = np.array(self.labels())
        return (labs[:, 0] + labs[:, 1] + 2 * labs[:, 2]).astype(float)

    def edge_indices(self, mode: int) -> np.ndarray:
        """Indices of basis states sitting on the top Fock level of ``mode``."""
        _check_mode(mode)
        top = self.n_max_1 if mode == 1 else self.n_max_2
        return np.flatnonzero(self.photon_numbers(mode) == top)

    def mode_annihilation(self, mode: int) -> sp.csr_matrix:
        _check_mode(mode)
        i1 = sp.identity(self.n_max_1 + 1, format="csr", dtype=complex)
        i2 = sp.identity(self.n_max_2 + 1, format="csr", dtype=complex)
        iq = sp.identity(2, format="csr", dtype=complex)
        if mode == 1:
            factors = (_ladder(self.n_max_1), i2, iq)
        else:
            factors = (i1, _ladder(self.n_max_2), iq)
        return sp.kron(sp.kron(factors[0], factors[1]), factors[2], format="csr")


def _check_mode(mode) -> None:
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode!r}")


def _same_spec(*objs) -> object:
    spec = objs[0].spec
    for obj in objs[1:]:
        if obj.spec != spec:
            raise SpecMismatchError(f"{spec} != {obj.spec}")
    return spec


class Operator:
    """Sparse complex matrix bound to the space it acts on.

    Only exact zeros are dropped from storage. Supports ``+``, ``-``, scalar
    ``*`` and ``@`` between operators on the same space.
    """

    __slots__ = ("spec", "data")

    def __init__(self, spec, data):
        mat = sp.csr_matrix(data, dtype=complex)
        if mat.shape != (spec.dim, spec.dim):
            raise ValueError(f"operator shape {mat.shape} does not match dim {spec.dim}")
        mat.eliminate_zeros()
        mat.sort_indices()
        self.spec = spec
        self.data = mat

    def __repr__(self):
        return f"Operator(spec={self.spec!r}, nnz={self.data.nnz})"

    @property
    def dim(self) -> int:
        return self.spec.dim

    def toarray(self) -> np.ndarray:
        return self.data.toarray()

    def dag(self) -> "Operator":
        return Operator(self.spec, self.data.conj().T)

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return Operator(_same_spec(self, other), self.data + other.data)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return Operator(_same_spec(self, other), self.data - other.data)

    def __neg__(self):
        return Operator(self.spec, -self.data)

    def __mul__(self, c):
        if isinstance(c, Operator) or not np.isscalar(c):
            return NotImplemented
        return Operator(self.spec, self.data * c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(_same_spec(self, other), self.data @ other.data)
        if isinstance(other, StateVector):
            _same_spec(self, other)
            return StateVector(other.spec, self.data @ other.amplitudes)
        return NotImplemented

    def norm(self) -> float:
        """Frobenius norm."""
        return float(sp.linalg.norm(self.data)) if self.data.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self.data - self.data.conj().T
        return diff.nnz == 0 or abs(diff).max() <= tol


@dataclass(frozen=True, eq=False)
class StateVector:
    spec: object
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.spec.dim,):
            raise ValueError(f"state length {amps.shape[0]} does not match dim {self.spec.dim}")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.spec, self.amplitudes / nrm)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def inner(self, other: "StateVector") -> complex:
        _same_spec(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(self.spec, np.outer(self.amplitudes, self.amplitudes.conj()))


def basis_state(spec: HilbertSpec, n1: int, n2: int, s: int = 0) -> StateVector:
    amps = np.zeros(spec.dim, dtype=complex)
    amps[spec.index(n1, n2, s)] = 1.0
    return StateVector(spec, amps)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense density matrix; validated as Hermitian, unit-trace and PSD on construction."""

    spec: object
    data: np.ndarray
    check: bool = True

    def __post_init__(self):
        rho = np.array(self.data, dtype=complex)
        if rho.shape != (self.spec.dim, self.spec.dim):
            raise ValueError(f"density matrix shape {rho.shape} does not match dim {self.spec.dim}")
        object.__setattr__(self, "data", rho)
        if self.check:
            herm = np.abs(rho - rho.conj().T).max(initial=0.0)
            if herm > HERMITIAN_TOL:
                raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3e})")
            tr = np.trace(rho)
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"density matrix trace {tr:.12g} differs from 1")
            lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
            if lam < -PSD_TOL:
                raise ValueError(f"density matrix has negative eigenvalue {lam:.3e}")

    @property
    def dim(self) -> int:
        return self.spec.dim

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def populations(self) -> np.ndarray:
        return np.diag(self.data).real.copy()

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.data + self.data.conj().T) / 2)


def annihilation(spec: HilbertSpec, mode: int) -> Operator:
    """Mode-``mode`` lowering operator; identity on the other factors."""
    return Operator(spec, spec.mode_annihilation(mode))


def creation(spec: HilbertSpec, mode: int) -> Operator:
    return annihilation(spec, mode).dag()


def number(spec, mode: int) -> Operator:
    """``a^dag a`` built from the diagonal so its spectrum is exactly ``0..n_max``."""
    return Operator(spec, sp.diags(spec.photon_numbers(mode).astype(complex), format="csr"))


def qubit_lowering(spec: HilbertSpec) -> Operator:
    sigma = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
    rest = sp.identity((spec.n_max_1 + 1) * (spec.n_max_2 + 1), format="csr", dtype=complex)
    return Operator(spec, sp.kron(rest, sigma, format="csr"))


def identity(spec) -> Operator:
    return Operator(spec, sp.identity(spec.dim, format="csr", dtype=complex))


def compose(terms: Iterable[tuple[Operator, complex]]) -> Operator:
    """Linear combination ``sum_k c_k O_k`` of operators sharing one space."""
    terms = list(terms)
    if not terms:
        raise ValueError("compose needs at least one term")
    ops = [op for op, _ in terms]
    spec = _same_spec(*ops)
    acc = sp.csr_matrix((spec.dim, spec.dim), dtype=complex)
    for op, c in terms:
        acc = acc + complex(c) * op.data
    return Operator(spec, acc)


def adjoint(op: Operator) -> Operator:
    return op.dag()


def commutator(a: Operator, b: Operator) -> Operator:
    spec = _same_spec(a, b)
    return Operator(spec, a.data @ b.data - b.data @ a.data)


def expectation(op: Operator, rho: DensityMatrix) -> complex:
    """``Tr[O rho]``."""
    _same_spec(op, rho)
    # Tr[O rho] = sum_ij O_ij rho_ji
    coo = op.data.tocoo()
    return complex(np.sum(coo.data * rho.data[coo.col, coo.row]))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full- or fixed-rank density matrix as a plain array (Ginibre construction)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def partial_trace_mode(rho: DensityMatrix | np.ndarray, spec: HilbertSpec, keep: int) -> np.ndarray:
    """Reduced state of one cavity mode, tracing out the other mode and the qubit."""
    _check_mode(keep)
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    d1, d2 = spec.n_max_1 + 1, spec.n_max_2 + 1
    t = data.reshape(d1, d2, 2, d1, d2, 2)
    if keep == 1:
        return np.einsum("ijkljk->il", t)
    return np.einsum("ijklmk->jm", t)


def as_array(obj) -> np.ndarray:
    if isinstance(obj, DensityMatrix):
        return obj.data
    if isinstance(obj, Operator):
        return obj.toarray()
    return np.asarray(obj, dtype=complex)
