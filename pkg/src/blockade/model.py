"""Hamiltonians of the extended nondegenerate two-photon Jaynes-Cummings model.

All energies and rates are in units of the driven-mode decay rate ``kappa1``.
The rotating frame removes the bare frequencies at the two-photon resonance
``omega_a = 2 omega_c``, leaving ``H_tot = -Delta N + H_int + Omega (a1 + a1^dag)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    HilbertSpec,
    Operator,
    StateVector,
    annihilation,
    compose,
    number,
    qubit_lowering,
)


@dataclass(frozen=True)
class SystemParams:
    g: float = 1.0
    J: float = 0.1
    Omega: float = 0.0
    Delta: float = 0.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    gamma: float = 0.01
    Gamma1: float = 0.0
    Gamma2: float = 0.0

    def __post_init__(self):
        for name in ("g", "J", "Omega", "kappa2", "gamma", "Gamma1", "Gamma2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")
        if not self.kappa1 > 0:
            raise ValueError(f"kappa1 sets the unit and must be positive, got {self.kappa1!r}")
        if not np.isfinite(self.Delta):
            raise ValueError("Delta must be finite")

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def weighted_excitation_number(spec: HilbertSpec) -> Operator:
    """``N = 2 sigma^dag sigma + n1 + n2``, diagonal in the product basis."""
    return Operator(spec, sp.diags(spec.excitation_numbers().astype(complex), format="csr"))


def interaction_hamiltonian(spec: HilbertSpec, params: SystemParams) -> Operator:
    """Photon hopping ``J (a1^dag a2 + h.c.)`` plus the three-body term ``g (a1 a2 sigma^dag + h.c.)``."""
    a1, a2 = annihilation(spec, 1), annihilation(spec, 2)
    sm = qubit_lowering(spec)
    hop = a1.dag() @ a2
    three = a1 @ a2 @ sm.dag()
    return compose([(hop, params.J), (hop.dag(), params.J),
                    (three, params.g), (three.dag(), params.g)])


def drive_hamiltonian(spec: HilbertSpec, params: SystemParams) -> Operator:
    a1 = annihilation(spec, 1)
    return compose([(a1, params.Omega), (a1.dag(), params.Omega)])


def total_hamiltonian(spec: HilbertSpec, params: SystemParams) -> Operator:
    return compose([
        (weighted_excitation_number(spec), -params.Delta),
        (interaction_hamiltonian(spec, params), 1.0),
        (drive_hamiltonian(spec, params), 1.0),
    ])


def nonhermitian_term(spec: HilbertSpec, params: SystemParams) -> Operator:
    """``-(i/2)(kappa1 n1 + kappa2 n2 + gamma sigma^dag sigma)``; the no-jump part of the dissipators."""
    sm = qubit_lowering(spec)
    return compose([
        (number(spec, 1), -0.5j * params.kappa1),
        (number(spec, 2), -0.5j * params.kappa2),
        (sm.dag() @ sm, -0.5j * params.gamma),
    ])


def effective_hamiltonian(spec: HilbertSpec, params: SystemParams) -> Operator:
    return total_hamiltonian(spec, params) + nonhermitian_term(spec, params)


@dataclass(frozen=True, eq=False)
class SubspaceSpectrum:
    n: int
    basis: list
    eigenvalues: np.ndarray
    eigenvectors: list
    block: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    def zero_modes(self, tol: float = 1e-10) -> list:
        return [v for lam, v in zip(self.eigenvalues, self.eigenvectors) if abs(lam) <= tol]


def subspace_labels(n: int, spec: HilbertSpec) -> list[tuple[int, int, int]]:
    """Basis states ``(n1, n2, s)`` with ``n1 + n2 + 2 s == n``, lexicographic."""
    labels = []
    for n1 in range(min(n, spec.n_max_1) + 1):
        for n2 in range(min(n, spec.n_max_2) + 1):
            for s in (0, 1):
                if n1 + n2 + 2 * s == n:
                    labels.append((n1, n2, s))
    return labels


def subspace_spectrum(params: SystemParams, n: int, spec: HilbertSpec | None = None) -> SubspaceSpectrum:
    """Diagonalize ``H_int`` restricted to the ``n``-excitation subspace.

    Eigenvalues come back ascending. Each eigenvector is phase-fixed so its
    largest-magnitude component is real and positive; inside degenerate
    clusters only the spanned subspace is meaningful.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"excitation number must be a nonnegative integer, got {n!r}")
    if spec is None:
        spec = HilbertSpec(n, n)
    if spec.n_max_1 < n or spec.n_max_2 < n:
        raise ValueError(f"truncation {spec} cannot hold the full n={n} subspace")
    labels = subspace_labels(n, spec)
    idx = [spec.index(*lab) for lab in labels]
    h = interaction_hamiltonian(spec, params).data[idx][:, idx].toarray()
    lam, vecs = np.linalg.eigh(h)
    states = []
    for k in range(len(lam)):
        v = vecs[:, k]
        j = int(np.argmax(np.abs(v)))
        v = v * (abs(v[j]) / v[j])
        full = np.zeros(spec.dim, dtype=complex)
        full[idx] = v
        states.append(StateVector(spec, full))
    return SubspaceSpectrum(n=n, basis=labels, eigenvalues=lam, eigenvectors=states, block=h)


def splitting(params: SystemParams, s: int, spec: HilbertSpec | None = None) -> float:
    """Exact ``Delta E_s``: the smallest eigenvalue magnitude in the ``2s+1`` subspace."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    spectrum = subspace_spectrum(params, 2 * s + 1, spec)
    return float(np.min(np.abs(spectrum.eigenvalues)))


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def splitting_asymptote(params: SystemParams, s: int) -> float:
    """Leading-order ``J (2s+1)!!/(2s)!! (J/g)^{2s}`` valid for ``J << g``."""
    if s == 0:
        return params.J
    if params.g == 0:
        raise ValueError("asymptote requires g > 0")
    coeff = double_factorial(2 * s + 1) / double_factorial(2 * s)
    return params.J * coeff * (params.J / params.g) ** (2 * s)


def manifold_labels(spec: HilbertSpec) -> list[tuple[int, int, int]]:
    labels = [(0, 0, 0)]
    for n in range(1, max(spec.n_max_1, spec.n_max_2) + 1):
        if n <= spec.n_max_1:
            labels.append((n, 0, 0))
        if n <= spec.n_max_2:
            labels.append((0, n, 0))
    return labels


def manifold_projector(spec: HilbertSpec) -> Operator:
    """Orthogonal projector onto span{|0,0,g>, |n,0,g>, |0,n,g>}."""
    diag = np.zeros(spec.dim, dtype=complex)
    for lab in manifold_labels(spec):
        diag[spec.index(*lab)] = 1.0
    return Operator(spec, sp.diags(diag, format="csr"))
