"""Closed-form correlations in the weak-driving limit ``Omega / kappa1 -> 0``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemParams


@dataclass(frozen=True)
class CooperativityPair:
    c2: complex
    c3: complex


def cooperativities(params: SystemParams) -> CooperativityPair:
    """Two-body ``4J^2/[(k1-2iD)(k2-2iD)]`` and three-body ``4g^2/[(k1+k2-4iD)(gamma-4iD)]`` parameters."""
    p = params
    den2 = (p.kappa1 - 2j * p.Delta) * (p.kappa2 - 2j * p.Delta)
    den3 = (p.kappa1 + p.kappa2 - 4j * p.Delta) * (p.gamma - 4j * p.Delta)
    if den2 == 0 or den3 == 0:
        raise ValueError("cooperativity denominator vanishes (zero rates at zero detuning)")
    return CooperativityPair(4 * p.J ** 2 / den2, 4 * p.g ** 2 / den3)


def analytic_g2(params: SystemParams, mode: int) -> float:
    """Weak-drive ``g_k^(2)(0) = |1 + (delta_k1 C2 - delta_k2) C3 / (1 + C2 + C3)|^2``."""
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode!r}")
    c = cooperativities(params)
    den = 1 + c.c2 + c.c3
    if den == 0:
        raise ValueError("degenerate denominator 1 + C2 + C3 = 0")
    num = c.c2 if mode == 1 else -1.0
    return float(abs(1 + num * c.c3 / den) ** 2)


def g2_biquadratic_approx(params: SystemParams) -> float:
    """Large-``g`` form ``[(1 + C2)/C3]^2`` of the undriven-mode correlation at zero detuning."""
    if params.Delta != 0:
        raise ValueError("the biquadratic approximation holds at Delta = 0")
    if params.g == 0:
        raise ValueError("the biquadratic approximation needs g > 0")
    c = cooperativities(params)
    return float(abs((1 + c.c2) / c.c3) ** 2)


@dataclass(frozen=True)
class AntibunchingWindow:
    width: float
    lower: float
    upper: float
    antibunched_at_center: bool

    def __float__(self):
        return float(self.width)


def _edge(params: SystemParams, threshold: float, sign: float, reach: float, tol: float,
          n_scan: int = 4000) -> float:
    def excess(delta):
        return analytic_g2(params.replace(Delta=sign * delta), 2) - threshold

    grid = np.linspace(0.0, reach, n_scan + 1)
    prev = 0.0
    for delta in grid[1:]:
        if excess(delta) >= 0:
            lo, hi = prev, delta
            break
        prev = delta
    else:
        raise RuntimeError(f"no window edge found within |Delta| <= {reach:g}")
    for _ in range(200):
        if hi - lo <= tol:
            return sign * 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0:
            hi = mid
        else:
            lo = mid
    raise RuntimeError("bisection did not converge")


def antibunching_window(params: SystemParams, zeta: float, reach: float = 5.0,
                        rtol: float = 1e-8) -> AntibunchingWindow:
    """Width of the detuning interval around zero where the undriven-mode ``g2 < 1/zeta``.

    The edges are bracketed on ``|Delta| <= reach * g`` and bisected to
    ``rtol * g``. A point that is not antibunched at zero detuning gives an
    empty window flagged by ``antibunched_at_center = False``.
    """
    if not zeta > 1:
        raise ValueError(f"zeta must exceed 1, got {zeta!r}")
    threshold = 1.0 / zeta
    centre = params.replace(Delta=0.0)
    if not analytic_g2(centre, 2) < threshold:
        return AntibunchingWindow(0.0, 0.0, 0.0, False)
    upper = _edge(centre, threshold, +1.0, reach * params.g, rtol * params.g)
    lower = _edge(centre, threshold, -1.0, reach * params.g, rtol * params.g)
    return AntibunchingWindow(upper - lower, lower, upper, True)


def window_asymptote(g: float, zeta: float) -> float:
    """``g (1 + sqrt(zeta))^(-1/2)``, the window width for ``J << g``."""
    return g / np.sqrt(1 + np.sqrt(zeta))
