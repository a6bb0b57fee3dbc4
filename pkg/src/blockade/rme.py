"""Reduced master equation on the zero-energy manifold and its closed-form optimum.

On the manifold spanned by ``|0,0>``, ``|0,1>`` and ``|n,0>`` (qubit in ``|g>``)
the two modes only talk through the single-excitation hop, so the undriven
mode can never hold two photons and its ``g2(0)`` vanishes identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import Operator, compose
from .lindblad import (
    LindbladModel,
    SteadyStateResult,
    _augmented,
    _superoperator,
    liouvillian,
    steady_state,
)
from .model import SystemParams


@dataclass(frozen=True)
class ReducedBasis:
    """``{|0,0>, |0,1>, |1,0>, |2,0>, ..., |N,0>}`` with ``N = n_max_ph``."""

    n_max_ph: int = 30

    def __post_init__(self):
        if int(self.n_max_ph) != self.n_max_ph or self.n_max_ph < 1:
            raise ValueError(f"n_max_ph must be a positive integer, got {self.n_max_ph!r}")

    @property
    def dim(self) -> int:
        return self.n_max_ph + 2

    def labels(self) -> list[tuple[int, int]]:
        return [(0, 0), (0, 1)] + [(n, 0) for n in range(1, self.n_max_ph + 1)]

    def index(self, n1: int, n2: int) -> int:
        if (n1, n2) == (0, 0):
            return 0
        if (n1, n2) == (0, 1):
            return 1
        if n2 == 0 and 1 <= n1 <= self.n_max_ph:
            return n1 + 1
        raise IndexError(f"|{n1},{n2}> is not in the reduced basis")

    def photon_numbers(self, mode: int) -> np.ndarray:
        if mode not in (1, 2):
            raise ValueError(f"mode must be 1 or 2, got {mode!r}")
        return np.array([lab[mode - 1] for lab in self.labels()], dtype=float)

    def excitation_numbers(self) -> np.ndarray:
        return self.photon_numbers(1) + self.photon_numbers(2)

    def edge_indices(self, mode: int) -> np.ndarray:
        # the undriven mode is capped at one photon by construction, not by truncation
        if mode == 1:
            return np.array([self.index(self.n_max_ph, 0)])
        return np.array([], dtype=int)

    def mode_annihilation(self, mode: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        if mode == 1:
            for n in range(1, self.n_max_ph + 1):
                rows.append(self.index(n - 1, 0))
                cols.append(self.index(n, 0))
                vals.append(np.sqrt(n))
        elif mode == 2:
            rows, cols, vals = [0], [1], [1.0]
        else:
            raise ValueError(f"mode must be 1 or 2, got {mode!r}")
        return sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(self.dim, self.dim))


def reduced_operators(basis: ReducedBasis) -> tuple[Operator, Operator]:
    return Operator(basis, basis.mode_annihilation(1)), Operator(basis, basis.mode_annihilation(2))


def reduced_hamiltonian(basis: ReducedBasis, params: SystemParams) -> Operator:
    a1, a2 = reduced_operators(basis)
    hop = Operator(basis, sp.csr_matrix(([1.0 + 0j], ([basis.index(1, 0)], [basis.index(0, 1)])),
                                        shape=(basis.dim, basis.dim)))
    number = Operator(basis, sp.diags(basis.excitation_numbers().astype(complex)))
    return compose([(number, -params.Delta), (hop, params.J), (hop.dag(), params.J),
                    (a1, params.Omega), (a1.dag(), params.Omega)])


def build_rme(basis: ReducedBasis, params: SystemParams) -> LindbladModel:
    """Reduced model: restricted ladders replace the full ones in every channel.

    ``g`` and ``gamma`` drop out; the ``a2^2`` channel is kept when requested
    but is the zero operator on this basis.
    """
    a1, a2 = reduced_operators(basis)
    jumps = [(a1, params.kappa1), (a2, params.kappa2)]
    if params.Gamma1 > 0:
        jumps.append((a1 @ a1, params.Gamma1))
    if params.Gamma2 > 0:
        jumps.append((a2 @ a2, params.Gamma2))
    return LindbladModel(reduced_hamiltonian(basis, params), tuple(jumps))


def reduced_steady_state(params: SystemParams, basis: ReducedBasis | None = None,
                         tol: float = 1e-9) -> SteadyStateResult:
    basis = ReducedBasis() if basis is None else basis
    return steady_state(liouvillian(build_rme(basis, params)), tol=tol)


def three_level_populations(J: float, Omega: float, kappa2: float, kappa1: float = 1.0) -> tuple[float, float]:
    """Closed-form ``(<n1>, <n2>)`` of the three-level reduced model, coefficients as printed."""
    k1, k2 = kappa1, kappa2
    q0 = k1 + k2
    q1 = k1 * (2 * Omega ** 2 + k1 * k2 + k2 * k2)
    q2 = k2 * (k1 ** 2 + 8 * Omega ** 2) * (4 * Omega ** 2 + k1 * k2 + k2 * k2)
    den = 16 * q0 * J ** 4 + 8 * q1 * J ** 2 + q2
    if den == 0:
        raise ValueError("three-level populations undefined: denominator vanishes")
    n1 = 4 * q2 * Omega ** 2 / (k1 ** 2 + 8 * Omega ** 2) / den
    n2 = 16 * q0 * J ** 2 * Omega ** 2 / den
    return n1, n2


@dataclass(frozen=True, eq=False)
class ThreeLevelSteadyState:
    """Steady state over ``{|0>, |L>=|1,0>, |R>=|0,1>}``."""

    rho: np.ndarray
    n1: float
    n2: float

    def __getattr__(self, name):
        if name.startswith("rho_") and len(name) == 6:
            pos = {"0": 0, "L": 1, "R": 2}
            try:
                return self.rho[pos[name[4]], pos[name[5]]]
            except KeyError:
                pass
        raise AttributeError(name)


def three_level_null_space(J: float, Omega: float, kappa2: float, kappa1: float = 1.0) -> np.ndarray:
    """Trace-one kernel element of the 3x3 reduced Liouvillian, ordered ``(0, L, R)``."""
    basis = ReducedBasis(1)
    params = SystemParams(g=0.0, J=J, Omega=Omega, kappa1=kappa1, kappa2=kappa2, gamma=0.0)
    sup = liouvillian(build_rme(basis, params)).superoperator.toarray()
    kernel = sla.null_space(sup)
    if kernel.shape[1] != 1:
        raise ValueError(f"three-level steady state not unique (kernel dimension {kernel.shape[1]})")
    rho = kernel[:, 0].reshape(3, 3, order="F")
    rho = rho / np.trace(rho)
    order = [basis.index(0, 0), basis.index(1, 0), basis.index(0, 1)]
    rho = rho[np.ix_(order, order)]
    return (rho + rho.conj().T) / 2


def three_level_steady_state(J: float, Omega: float, kappa2: float, kappa1: float = 1.0) -> ThreeLevelSteadyState:
    n1, n2 = three_level_populations(J, Omega, kappa2, kappa1)
    return ThreeLevelSteadyState(three_level_null_space(J, Omega, kappa2, kappa1), n1, n2)


def optimal_hopping(kappa2: float, kappa1: float = 1.0) -> float:
    """Hopping that minimizes the three-level infidelity at ``Omega = kappa1 / 2``."""
    if not kappa2 > 0:
        raise ValueError("kappa2 must be positive")
    k1, k2 = kappa1, kappa2
    return k1 * ((3 * k2 / (16 * k1)) * ((k1 + k2) / k1 - k2 / (k1 + k2))) ** 0.25


def optimal_infidelity(kappa2: float, kappa1: float = 1.0) -> float:
    eps = kappa2 / kappa1
    if not eps > 0:
        raise ValueError("kappa2 / kappa1 must be positive")
    root = np.sqrt(12 * eps * (1 + eps) * (1 + eps + eps ** 2))
    return float((eps * (1 + 2 * eps) + root) / (1 + 2 * eps * (1 + eps) + root))


def asymptotic_scalings(kappa2: float, kappa1: float = 1.0) -> tuple[float, float]:
    """Leading small-``kappa2`` forms of the optimal hopping and infidelity."""
    eps = kappa2 / kappa1
    if not eps > 0:
        raise ValueError("kappa2 / kappa1 must be positive")
    return kappa1 * (3 * eps / 16) ** 0.25, float(np.sqrt(12 * eps))


@dataclass(frozen=True)
class BrightnessOptimum:
    J: float
    Omega: float
    value: float
    on_boundary: bool
    evaluations: int


class _ReducedObjective:
    """Population of one reduced basis state as a function of ``(J, Omega)``.

    The superoperator is affine in both, so it is assembled once and combined per call.
    """

    def __init__(self, params: SystemParams, basis: ReducedBasis, target: str):
        if target not in ("n2", "p10"):
            raise ValueError(f"target must be 'n2' or 'p10', got {target!r}")
        self.basis = basis
        self.d = basis.dim
        base = liouvillian(build_rme(basis, params.replace(J=0.0, Omega=0.0)))
        self.base = base.superoperator
        unit = build_rme(basis, params.replace(J=1.0, Omega=0.0)).hamiltonian.data
        drive = build_rme(basis, params.replace(J=0.0, Omega=1.0)).hamiltonian.data
        shift = build_rme(basis, params.replace(J=0.0, Omega=0.0)).hamiltonian.data
        self.hop = _superoperator(-1j * (unit - shift), [])
        self.drive = _superoperator(-1j * (drive - shift), [])
        self.weights = np.ones(self.d)
        self.slot = basis.index(0, 1) if target == "n2" else basis.index(1, 0)
        self.rhs = np.zeros(self.d * self.d, dtype=complex)
        self.rhs[0] = 1.0
        self.calls = 0

    def __call__(self, J: float, Omega: float) -> float:
        self.calls += 1
        sup = self.base + J * self.hop + Omega * self.drive
        vec = spla.splu(_augmented(sp.csr_matrix(sup), self.weights, 0),
                         permc_spec="MMD_AT_PLUS_A").solve(self.rhs)
        k = self.slot
        return float(vec[k + k * self.d].real)


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    invphi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def optimize_brightness(params: SystemParams, search_box=((0.0, 1.0), (0.0, 1.5)),
                        basis: ReducedBasis | None = None, fixed_J: float | None = None,
                        target: str = "n2", grid: int = 64, rounds: int = 3,
                        xtol: float = 1e-9) -> BrightnessOptimum:
    """Maximize a reduced-model population over ``(J, Omega)`` inside ``search_box``.

    A ``grid x grid`` scan locates the basin, then golden-section searches
    alternate over the coordinates for ``rounds`` passes, each confined to
    one grid step around the incumbent. ``target="p10"`` maximizes the
    ``|1,0>`` population instead of the undriven-mode brightness.
    """
    basis = ReducedBasis() if basis is None else basis
    (j_lo, j_hi), (o_lo, o_hi) = search_box
    if not (j_lo < j_hi and o_lo < o_hi):
        raise ValueError(f"degenerate search box {search_box!r}")
    objective = _ReducedObjective(params, basis, target)
    omegas = np.linspace(o_lo, o_hi, grid)
    o_step = omegas[1] - omegas[0]

    if fixed_J is not None:
        values = np.array([objective(fixed_J, om) for om in omegas])
        k = int(np.argmax(values))
        om, val = omegas[k], values[k]
        for _ in range(rounds):
            om, val = _golden_max(lambda x: objective(fixed_J, x), max(o_lo, om - o_step),
                                  min(o_hi, om + o_step), xtol)
        edge = om - o_lo < o_step or o_hi - om < o_step
        return BrightnessOptimum(float(fixed_J), float(om), float(val), bool(edge), objective.calls)

    hops = np.linspace(j_lo, j_hi, grid)
    j_step = hops[1] - hops[0]
    values = np.array([[objective(j, om) for om in omegas] for j in hops])
    i, k = np.unravel_index(int(np.argmax(values)), values.shape)
    j, om, val = hops[i], omegas[k], values[i, k]
    for _ in range(rounds):
        j, val = _golden_max(lambda x: objective(x, om), max(j_lo, j - j_step), min(j_hi, j + j_step), xtol)
        om, val = _golden_max(lambda x: objective(j, x), max(o_lo, om - o_step), min(o_hi, om + o_step), xtol)
    edge = (j - j_lo < j_step and j_lo > 0) or j_hi - j < j_step or (om - o_lo < o_step and o_lo > 0) \
        or o_hi - om < o_step
    return BrightnessOptimum(float(j), float(om), float(val), bool(edge), objective.calls)
