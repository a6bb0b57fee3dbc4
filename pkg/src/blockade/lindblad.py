"""Master equation assembly, steady states, time evolution and observables.

Vectorization is column stacking, ``vec(rho)[i + j d] = rho[i, j]``, i.e.
``rho.reshape(-1, order="F")``. With it ``vec(A X B) = (B^T kron A) vec(X)``,
so for the generator written as

    L(rho) = A rho + rho A^dag + sum_k r_k o_k rho o_k^dag,
    A = -i H - 1/2 sum_k r_k o_k^dag o_k,

the superoperator is ``I kron A + conj(A) kron I + sum_k r_k conj(o_k) kron o_k``.
Worked 2x2 example: for ``H = 0`` and a single jump ``o = |0><1|`` with rate
``k``, the column of ``L`` for ``vec(|1><1|)`` (index 3) holds ``+k`` at index 0
(``|0><0|``) and ``-k`` at index 3.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.linalg.lapack import ztrsyl

from .hilbert import PSD_TOL, DensityMatrix, HilbertSpec, Operator, as_array, qubit_lowering, annihilation
from .model import SystemParams, total_hamiltonian

MAX_SUPERDIM = 400_000
DIRECT_MAX_SUPERDIM = 1_100
G2_FLOOR = 1e-14
TRUNCATION_WARN = 1e-6
# below this drive-to-loss ratio the solve runs on rescaled unknowns
WEAK_SCALE_THRESHOLD = 1e-2


class SteadyStateError(RuntimeError):
    pass


class SingularSteadyStateError(SteadyStateError):
    def __init__(self, message: str, null_dim: int | None = None):
        super().__init__(message)
        self.null_dim = null_dim


class IntegrationError(RuntimeError):
    pass


class UndefinedCorrelationError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian: Operator
    jumps: tuple = ()

    def __post_init__(self):
        jumps = tuple((op, float(rate)) for op, rate in self.jumps)
        object.__setattr__(self, "jumps", jumps)
        spec = self.hamiltonian.spec
        for op, rate in jumps:
            if op.spec != spec:
                raise ValueError("all jump operators must share the Hamiltonian's space")
            if not rate >= 0:
                raise ValueError(f"jump rates must be nonnegative, got {rate}")
        if not self.hamiltonian.is_hermitian(1e-12):
            raise ValueError("Hamiltonian is not Hermitian")

    @property
    def spec(self):
        return self.hamiltonian.spec

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def no_jump_generator(self) -> sp.csr_matrix:
        """``A = -i H - 1/2 sum r o^dag o``."""
        a = -1j * self.hamiltonian.data
        for op, rate in self.jumps:
            if rate:
                a = a - 0.5 * rate * (op.data.conj().T @ op.data)
        return sp.csr_matrix(a)


def build_fme(spec: HilbertSpec, params: SystemParams) -> LindbladModel:
    """Full master equation: cavity and qubit decay, plus two-photon loss when switched on."""
    a1, a2 = annihilation(spec, 1), annihilation(spec, 2)
    jumps = [(a1, params.kappa1), (a2, params.kappa2), (qubit_lowering(spec), params.gamma)]
    if params.Gamma1 > 0:
        jumps.append((a1 @ a1, params.Gamma1))
    if params.Gamma2 > 0:
        jumps.append((a2 @ a2, params.Gamma2))
    return LindbladModel(total_hamiltonian(spec, params), tuple(jumps))


def _superoperator(a: sp.spmatrix, jumps) -> sp.csr_matrix:
    d = a.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    sup = sp.kron(eye, a, format="csr") + sp.kron(a.conj(), eye, format="csr")
    for op, rate in jumps:
        if rate:
            sup = sup + rate * sp.kron(op.conj(), op, format="csr")
    sup = sp.csr_matrix(sup)
    sup.eliminate_zeros()
    return sup


@dataclass(frozen=True, eq=False)
class Liouvillian:
    spec: object
    superoperator: sp.csr_matrix
    model: LindbladModel

    @property
    def dim(self) -> int:
        return self.spec.dim

    def apply(self, rho) -> np.ndarray:
        d = self.dim
        vec = as_array(rho).reshape(-1, order="F")
        return (self.superoperator @ vec).reshape(d, d, order="F")

    def trace_functional(self) -> np.ndarray:
        d = self.dim
        t = np.zeros(d * d)
        t[np.arange(d) * (d + 1)] = 1.0
        return t


def liouvillian(model: LindbladModel, max_superdim: int = MAX_SUPERDIM) -> Liouvillian:
    d = model.dim
    if d * d > max_superdim:
        raise ValueError(f"Liouvillian dimension {d * d} exceeds cap {max_superdim}")
    jumps = [(op.data, rate) for op, rate in model.jumps]
    return Liouvillian(model.spec, _superoperator(model.no_jump_generator(), jumps), model)


@dataclass(frozen=True, eq=False)
class SteadyStateResult:
    rho: DensityMatrix
    residual: float
    solver_info: dict = field(default_factory=dict)


def _auto_scale(model: LindbladModel, excitations: np.ndarray) -> float:
    """Drive-to-loss ratio used to rescale ``rho_ij -> rho_ij / s^(N_i + N_j)``.

    Weakly driven steady states have entries spanning dozens of decades; on
    rescaled unknowns they are all O(1) and keep their relative precision.
    """
    coo = model.hamiltonian.data.tocoo()
    off = excitations[coo.row] != excitations[coo.col]
    drive = float(np.abs(coo.data[off]).max(initial=0.0))
    loss = max((rate for _, rate in model.jumps), default=0.0)
    if loss == 0.0:
        return 1.0
    s = drive / loss
    if s >= WEAK_SCALE_THRESHOLD:
        return 1.0
    return max(s, 1e-6)


def _scaled(mat: sp.spmatrix, excitations: np.ndarray, s: float) -> sp.csr_matrix:
    """``D^{-1} M D`` with ``D = diag(s^N)``."""
    if s == 1.0:
        return sp.csr_matrix(mat)
    coo = sp.coo_matrix(mat)
    factor = s ** (excitations[coo.col] - excitations[coo.row])
    return sp.csr_matrix((coo.data * factor, (coo.row, coo.col)), shape=mat.shape)


def steady_state(liou: Liouvillian, tol: float = 1e-9, method: str = "auto",
                 scale: float | None = None) -> SteadyStateResult:
    """Unique trace-one solution of ``L rho = 0``.

    ``method`` is ``"direct"`` (sparse LU of the trace-augmented system),
    ``"krylov"`` (GMRES preconditioned by an exact Sylvester solve of the
    no-jump part) or ``"eigen"`` (shift-invert eigenpair); ``"auto"`` picks
    direct for small systems and Krylov otherwise. ``residual`` is
    ``max |(L rho)_ij|`` in units of the rates.
    """
    model = liou.model
    d = liou.dim
    spec = liou.spec
    excitations = np.asarray(spec.excitation_numbers(), dtype=float)
    s = _auto_scale(model, excitations) if scale is None else float(scale)
    if not 0 < s <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {s}")
    if method == "auto":
        method = "direct" if d * d <= DIRECT_MAX_SUPERDIM else "krylov"

    a = _scaled(model.no_jump_generator(), excitations, s)
    jumps = [(_scaled(op.data, excitations, s), rate) for op, rate in model.jumps if rate]
    weights = s ** (2 * excitations)
    vac = int(np.argmin(excitations))

    t0 = time.perf_counter()
    if method == "direct":
        y, info = _solve_direct(a, jumps, weights, vac, liou)
    elif method == "krylov":
        y, info = _solve_krylov(a, jumps, weights, vac)
    elif method == "eigen":
        y, info = _solve_eigen(liou), {"method": "eigen"}
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    if info["method"] == "eigen":
        s = 1.0
    info["scale"] = s
    info["seconds"] = time.perf_counter() - t0

    w = s ** excitations
    rho = y * np.outer(w, w)
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    lam = np.linalg.eigvalsh(rho).min()
    if lam < -PSD_TOL:
        raise SteadyStateError(f"steady state has negative eigenvalue {lam:.3e}")
    residual = float(np.abs(liou.superoperator @ rho.reshape(-1, order="F")).max())
    if residual > tol:
        raise SteadyStateError(f"steady-state residual {residual:.3e} exceeds tolerance {tol:.1e}")
    _warn_truncation(spec, rho)
    return SteadyStateResult(DensityMatrix(spec, rho), residual, info)


def _augmented(sup: sp.csr_matrix, weights: np.ndarray, vac: int) -> sp.csc_matrix:
    d = weights.size
    row = vac * (d + 1)
    trace_row = sp.csr_matrix((weights.astype(complex), (np.zeros(d, dtype=int), np.arange(d) * (d + 1))),
                              shape=(1, d * d))
    return sp.vstack([sup[:row], trace_row, sup[row + 1:]], format="csc")


def _solve_direct(a, jumps, weights, vac, liou):
    d = weights.size
    mat = _augmented(_superoperator(a, jumps), weights, vac)
    rhs = np.zeros(d * d, dtype=complex)
    rhs[vac * (d + 1)] = 1.0
    try:
        lu = spla.splu(mat)
    except RuntimeError as exc:
        null_dim = _null_dimension(liou)
        raise SingularSteadyStateError(
            f"trace-augmented Liouvillian is singular ({exc}); estimated null-space dimension {null_dim}",
            null_dim) from exc
    udiag = np.abs(lu.U.diagonal())
    if udiag.min() <= 1e-13 * udiag.max():
        return _solve_eigen(liou), {"method": "eigen", "fallback_from": "direct"}
    y = lu.solve(rhs).reshape(d, d, order="F")
    return y, {"method": "direct", "lu_nnz": int(lu.L.nnz + lu.U.nnz)}


def _solve_krylov(a, jumps, weights, vac, rtol=1e-13, restart=200, maxiter=20):
    d = weights.size
    adense = a.toarray()
    tmat, z = sla.schur(adense, output="complex")
    zh = z.conj().T
    # Sylvester eigenvalues are lambda_i + conj(lambda_j); shift only if a mode does not decay
    re_max = np.real(np.diag(tmat)).max()
    shift = 0.0
    if re_max > -1e-10:
        shift = 1e-6 * max(1.0, np.abs(np.diag(tmat)).max())
        tmat = tmat - (re_max + shift) * np.eye(d)
    ops = [(op, op.conj().T.tocsr(), rate) for op, rate in jumps]

    def apply(vec):
        y = vec.reshape(d, d, order="F")
        out = adense @ y + y @ adense.conj().T
        for op, opd, rate in ops:
            out += rate * (op @ (opd.T @ y.T).T)
        out[vac, vac] += np.dot(weights, np.diag(y))
        return out.reshape(-1, order="F")

    def precondition(vec):
        c = zh @ vec.reshape(d, d, order="F") @ z
        y, scl, info = ztrsyl(tmat, tmat, c, isgn=1, tranb="C")
        return (z @ (y / scl) @ zh).reshape(-1, order="F")

    n = d * d
    op = spla.LinearOperator((n, n), matvec=apply, dtype=complex)
    prec = spla.LinearOperator((n, n), matvec=precondition, dtype=complex)
    rhs = np.zeros(n, dtype=complex)
    rhs[vac * (d + 1)] = 1.0
    count = [0]

    def tick(_):
        count[0] += 1

    sol, info = spla.gmres(op, rhs, M=prec, rtol=rtol, atol=0.0, restart=restart,
                           maxiter=maxiter, callback=tick, callback_type="pr_norm")
    if info < 0:
        raise SteadyStateError(f"GMRES breakdown (info={info})")
    return sol.reshape(d, d, order="F"), {"method": "krylov", "iterations": count[0],
                                          "converged": info == 0, "sylvester_shift": shift}


def _null_dimension(liou: Liouvillian, k: int = 4) -> int | None:
    n = liou.superoperator.shape[0]
    if n > 40_000:
        return None
    mat = liou.superoperator.toarray() if n <= 2500 else None
    if mat is not None:
        sv = np.linalg.svd(mat, compute_uv=False)
        return int(np.sum(sv <= 1e-9 * max(sv.max(), 1.0)))
    vals = spla.eigs(liou.superoperator.tocsc(), k=min(k, n - 2), sigma=-1e-7, return_eigenvectors=False)
    scale = max(1.0, abs(liou.superoperator).max())
    return int(np.sum(np.abs(vals) <= 1e-8 * scale))


def _solve_eigen(liou: Liouvillian) -> np.ndarray:
    """Eigenvector of ``L`` closest to zero via shift-invert; refuses degenerate kernels."""
    n = liou.superoperator.shape[0]
    d = liou.dim
    k = min(3, n - 2)
    vals, vecs = spla.eigs(liou.superoperator.tocsc(), k=k, sigma=-1e-7)
    order = np.argsort(np.abs(vals))
    scale = max(1.0, abs(liou.superoperator).max())
    zero = np.abs(vals) <= 1e-8 * scale
    if zero.sum() != 1:
        raise SingularSteadyStateError(
            f"Liouvillian kernel has dimension {int(zero.sum())}; steady state not unique",
            int(zero.sum()))
    y = vecs[:, order[0]].reshape(d, d, order="F")
    return y / np.trace(y)


def _warn_truncation(spec, rho: np.ndarray) -> None:
    pops = np.diag(rho).real
    for mode in (1, 2):
        edge = spec.edge_indices(mode)
        if edge.size and pops[edge].sum() > TRUNCATION_WARN:
            warnings.warn(f"mode {mode} top Fock level holds population {pops[edge].sum():.2e}; "
                          "increase the truncation", TruncationWarning, stacklevel=3)


def evolve(liou: Liouvillian, rho0, t_grid, rtol: float = 1e-10, atol: float = 1e-12,
           method: str = "DOP853", drift_tol: float = 1e-8) -> list[DensityMatrix]:
    """Integrate ``d rho/dt = L rho`` with an adaptive explicit Runge-Kutta scheme.

    Returns one Hermitized state per grid point, starting at ``t_grid[0]``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a nonempty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly ascending")
    d = liou.dim
    y0 = as_array(rho0).reshape(-1, order="F").astype(complex)
    sup = liou.superoperator
    if t_grid.size == 1:
        states = [y0]
    else:
        sol = solve_ivp(lambda t, y: sup @ y, (t_grid[0], t_grid[-1]), y0, method=method,
                        t_eval=t_grid, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise IntegrationError(f"integration failed: {sol.message}")
        states = list(sol.y.T)
    tr0 = np.trace(y0.reshape(d, d, order="F"))
    out = []
    for t, vec in zip(t_grid, states):
        rho = vec.reshape(d, d, order="F")
        drift = abs(np.trace(rho) - tr0)
        if drift > drift_tol * max(1.0, t - t_grid[0]):
            raise IntegrationError(f"trace drift {drift:.2e} at t={t:g} exceeds tolerance")
        out.append(DensityMatrix(liou.spec, (rho + rho.conj().T) / 2))
    return out


def mean_photon(rho: DensityMatrix, mode: int) -> float:
    n = rho.spec.photon_numbers(mode)
    return float(np.dot(n, np.diag(rho.data).real))


def g2_zero(rho: DensityMatrix, mode: int, floor: float = G2_FLOOR) -> float:
    """``<n(n-1)> / <n>^2`` from the Fock-diagonal populations."""
    n = rho.spec.photon_numbers(mode)
    pops = np.diag(rho.data).real
    mean = float(np.dot(n, pops))
    if mean <= floor:
        raise UndefinedCorrelationError(f"mode {mode} mean photon number {mean:.3e} is below {floor:g}")
    return float(np.dot(n * (n - 1), pops)) / mean ** 2


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh((mat + mat.conj().T) / 2)
    if lam.min() < -PSD_TOL:
        raise ValueError(f"input is not positive semidefinite (eigenvalue {lam.min():.3e})")
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def fidelity(rho, sigma) -> float:
    """``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``; ``sigma`` may be sub-normalized."""
    r, s = as_array(rho), as_array(sigma)
    if r.shape != s.shape:
        raise ValueError(f"shape mismatch {r.shape} vs {s.shape}")
    root = _psd_sqrt(r)
    _psd_sqrt(s)
    inner = root @ s @ root
    mu = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    value = float(np.sum(np.sqrt(np.clip(mu, 0.0, None))) ** 2)
    return min(max(value, 0.0), 1.0)


def trace_norm_distance(rho, sigma) -> float:
    """``||rho - sigma||_1``, the sum of singular values of the difference."""
    r, s = as_array(rho), as_array(sigma)
    if r.shape != s.shape:
        raise ValueError(f"shape mismatch {r.shape} vs {s.shape}")
    return float(np.linalg.svd(r - s, compute_uv=False).sum())


def projected(rho: DensityMatrix, projector: Operator) -> np.ndarray:
    p = projector.toarray()
    return p @ rho.data @ p


def coherent_amplitudes(n_max: int, alpha: complex) -> np.ndarray:
    """Fock amplitudes of ``|alpha>`` truncated at ``n_max`` and renormalized."""
    n = np.arange(n_max + 1)
    logfact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * logfact) * np.power(complex(alpha), n)
    return amps / np.linalg.norm(amps)
