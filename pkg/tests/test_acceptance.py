"""End-to-end acceptance checks, each at its stated tolerance.

Every test records one or more clauses through the ``criterion`` fixture; the
terminal summary prints one PASS/FAIL line per criterion.
"""

import numpy as np
import pytest

from blockade.hilbert import HilbertSpec, basis_state, partial_trace_mode, random_density_matrix
from blockade.lindblad import (
    build_fme,
    coherent_amplitudes,
    evolve,
    fidelity,
    g2_zero,
    liouvillian,
    mean_photon,
    projected,
    steady_state,
    trace_norm_distance,
)
from blockade.model import SystemParams, manifold_projector, splitting, splitting_asymptote, subspace_spectrum
from blockade.powerlaw import fit_power_law
from blockade.rme import (
    asymptotic_scalings,
    optimal_hopping,
    optimal_infidelity,
    optimize_brightness,
    reduced_steady_state,
    three_level_populations,
)
from blockade.weakdrive import analytic_g2, antibunching_window, window_asymptote

FULL = HilbertSpec(10, 10)


def _fme(params, spec=FULL):
    return steady_state(liouvillian(build_fme(spec, params))).rho


@pytest.mark.slow
def test_weak_drive_fme_matches_closed_form(criterion):
    grid = np.logspace(np.log10(0.1), np.log10(50), 12)
    worst = 0.0
    for J in (0.1, 1.0, 2.5):
        for g in grid:
            p = SystemParams(g=g, J=J, Omega=1e-4, Delta=0.0, kappa2=1.0, gamma=0.01)
            rho = _fme(p)
            for mode in (1, 2):
                exact = analytic_g2(p, mode)
                worst = max(worst, abs(g2_zero(rho, mode) / exact - 1))
    ok = worst <= 0.02
    criterion(1, "fme vs closed form", ok, f"max rel dev {worst:.2e}, 72 values")
    assert ok


def test_biquadratic_slope(criterion):
    g = np.logspace(np.log10(5), np.log10(50), 40)
    y = [analytic_g2(SystemParams(g=x, J=0.1, kappa2=1.0, gamma=0.01), 2) for x in g]
    fit = fit_power_law(g, y)
    ok = abs(fit.exponent + 4.0) <= 0.05
    criterion(2, "slope", ok, f"{fit.exponent:.4f}")
    assert ok


@pytest.mark.slow
def test_strong_drive_exponent(criterion):
    g = np.logspace(np.log10(5), np.log10(50), 6)
    betas = []
    for k2 in (1.0, 0.1, 0.01):
        y = [g2_zero(_fme(SystemParams(g=x, J=0.1, Omega=0.5, kappa2=k2, gamma=0.01)), 2) for x in g]
        betas.append(-fit_power_law(g, y).exponent)
    ok = all(2 < b < 4 for b in betas)
    criterion(3, "beta0", ok, ", ".join(f"{b:.3f}" for b in betas))
    assert ok


@pytest.mark.slow
def test_reduced_model_tracks_full_model(criterion):
    gaps = []
    for k2 in np.logspace(-3, 0, 8):
        p = SystemParams(g=20.0, J=0.1, Omega=0.5, kappa2=k2, gamma=0.01)
        full = mean_photon(_fme(p), 2)
        reduced = mean_photon(reduced_steady_state(p).rho, 2)
        gaps.append(abs(full - reduced))
    ok = max(gaps) <= 0.01
    criterion(4, "max |n2 fme - n2 rme|", ok, f"{max(gaps):.2e}")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("kappa2", [0.1, 0.01, 0.001])
def test_optimizer_recovers_closed_form_optimum(kappa2, criterion):
    best = optimize_brightness(SystemParams(kappa2=kappa2), search_box=((0.0, 1.0), (0.0, 1.5)))
    j_dev = best.J / optimal_hopping(kappa2) - 1
    o_dev = best.Omega / 0.5 - 1
    ok = abs(j_dev) <= 0.02 and abs(o_dev) <= 0.02 and not best.on_boundary
    criterion(5, f"optimizer k2={kappa2:g}", ok, f"J {j_dev:+.2%}, Omega {o_dev:+.2%}")
    assert ok


def test_optimal_infidelity_consistency(criterion):
    worst = 0.0
    for k2 in (0.1, 0.01, 0.001):
        _, n2 = three_level_populations(optimal_hopping(k2), 0.5, k2)
        worst = max(worst, abs(optimal_infidelity(k2) - (1 - n2)))
    ok = worst <= 1e-10
    criterion(5, "I_opt vs 1-n2", ok, f"{worst:.1e}")
    assert ok


def test_asymptote_ratios(criterion):
    j_asym, i_asym = asymptotic_scalings(1e-3)
    rj = optimal_hopping(1e-3) / j_asym
    ri = optimal_infidelity(1e-3) / i_asym
    ok = abs(rj - 1) <= 0.05 and abs(ri - 1) <= 0.05
    criterion(5, "asymptote ratios eps=1e-3", ok, f"J {rj:.5f}, I {ri:.4f}")
    assert ok


def test_interaction_spectrum(criterion):
    p = SystemParams(g=1.0, J=0.37)
    e0 = splitting(p, 0)
    zeros = subspace_spectrum(p, 2).eigenvalues
    n_zero = int(np.sum(np.abs(zeros) <= 1e-10))
    q = SystemParams(g=10.0, J=0.1)
    ratio = splitting(q, 1, HilbertSpec(3, 3)) / splitting_asymptote(q, 1)
    chiral = 0.0
    rng = np.random.default_rng(6)
    for _ in range(5):
        r = SystemParams(g=rng.uniform(0.1, 5), J=rng.uniform(0.01, 2))
        for n in range(5):
            lam = subspace_spectrum(r, n, HilbertSpec(4, 4)).eigenvalues
            chiral = max(chiral, np.abs(np.sort(lam) - np.sort(-lam)).max(initial=0.0))
    ok = abs(e0 - p.J) <= 4 * np.finfo(float).eps * p.J and n_zero == 2 and 0.95 <= ratio <= 1.05 and chiral <= 1e-10
    criterion(6, "spectrum", ok, f"dE0-J {e0 - p.J:.1e}, zero modes {n_zero}, dE1 ratio {ratio:.5f}, "
                                 f"chiral {chiral:.1e}")
    assert ok


@pytest.mark.slow
def test_projection_infidelity_scaling(criterion):
    J = optimal_hopping(0.01)
    proj = manifold_projector(FULL)
    x = np.logspace(-3, -1, 5)
    y = []
    for ratio in x:
        rho = _fme(SystemParams(g=J / ratio, J=J, Omega=0.5, kappa2=0.01, gamma=0.01))
        y.append(1 - fidelity(rho, projected(rho, proj)))
    slope = fit_power_law(x, y).exponent
    ok = abs(slope - 2.0) <= 0.2
    criterion(7, "infidelity slope", ok, f"{slope:.4f}")

    rng = np.random.default_rng(7)
    spec = HilbertSpec(2, 2)
    p = manifold_projector(spec).toarray()
    violations = 0
    for k in range(100):
        rho = random_density_matrix(spec.dim, rng, rank=1 + k % spec.dim)
        pr = p @ rho @ p
        if trace_norm_distance(rho, pr) > 2 * np.sqrt(1 - fidelity(rho, pr)) + 1e-12:
            violations += 1
    criterion(7, "trace-norm bound", violations == 0, f"{violations}/100 violations")
    assert ok and violations == 0


def test_linear_limit_coherent_state(criterion):
    spec = HilbertSpec(10, 2)
    rho = _fme(SystemParams(g=0.0, J=0.0, Omega=0.3, Delta=0.0), spec)
    mode1 = partial_trace_mode(rho, spec, 1)
    alpha = -2j * 0.3
    ket = coherent_amplitudes(spec.n_max_1, alpha)
    f = fidelity(mode1, np.outer(ket, ket.conj()))
    ok = f >= 1 - 1e-6
    criterion(8, "coherent-state fidelity", ok, f"1-F = {1 - f:.1e}")
    assert ok


def test_two_photon_dissipation(criterion):
    box = ((0.0, 1.0), (0.0, 30.0))
    plain = optimize_brightness(SystemParams(kappa2=0.01), search_box=((0.0, 1.0), (0.0, 1.5)),
                                fixed_J=0.0, target="p10")
    strong = optimize_brightness(SystemParams(kappa2=0.01, Gamma1=100.0), search_box=box,
                                 fixed_J=0.0, target="p10")
    ok1 = abs(plain.value - np.exp(-1)) <= 1e-3
    ok2 = strong.value >= 0.49
    p = SystemParams(J=0.2, Omega=0.5, kappa2=0.01, Gamma1=3.0)
    n2 = [mean_photon(reduced_steady_state(p.replace(Gamma2=G2)).rho, 2) for G2 in (0.0, 1.0, 50.0)]
    ok3 = n2[0] == n2[1] == n2[2]
    criterion(9, "Gamma1=0 bound", ok1, f"{plain.value:.6f} at Omega {plain.Omega:.4f}")
    criterion(9, "Gamma1=100 bound", ok2, f"{strong.value:.5f}")
    criterion(9, "Gamma2 inert", ok3, f"spread {max(n2) - min(n2):.1e}")
    assert ok1 and ok2 and ok3


def test_high_brightness_endpoint(criterion):
    k2 = 1e-3
    p = SystemParams(g=20.0, J=optimal_hopping(k2), Omega=0.5, kappa2=k2, gamma=0.01)
    rho = _fme(p)
    purity = 1 - g2_zero(rho, 2)
    gap = abs(mean_photon(rho, 2) - (1 - optimal_infidelity(k2)))
    ok = purity >= 0.99 and gap <= 0.05
    criterion(10, "purity and brightness", ok, f"P {purity:.6f}, |n2 - (1-I_opt)| {gap:.2e}")
    assert ok


def test_antibunching_window_asymptote(criterion):
    worst = 0.0
    for zeta in (2, 4, 8):
        for g in (5.0, 10.0):
            w = antibunching_window(SystemParams(g=g, J=0.1, kappa2=1.0, gamma=0.01), zeta)
            worst = max(worst, abs(w.width / window_asymptote(g, zeta) - 1))
    ok = worst <= 0.1
    criterion(11, "window ratio", ok, f"max dev {worst:.3f}")
    assert ok


def test_evolution_reaches_steady_state(criterion):
    spec = HilbertSpec(3, 3)
    rng = np.random.default_rng(12)
    worst_dist, worst_drift = 0.0, 0.0
    for _ in range(3):
        p = SystemParams(g=rng.uniform(0.5, 2), J=rng.uniform(0.1, 1), Omega=rng.uniform(0.1, 0.5),
                         Delta=rng.uniform(-0.5, 0.5), kappa2=rng.uniform(0.5, 2), gamma=rng.uniform(0.5, 2))
        liou = liouvillian(build_fme(spec, p))
        t = np.linspace(0.0, 50.0, 26)
        states = evolve(liou, basis_state(spec, 0, 0, 0).projector(), t)
        worst_dist = max(worst_dist, trace_norm_distance(states[-1], steady_state(liou).rho))
        worst_drift = max(worst_drift, max(abs(s.trace() - 1) / max(ti, 1.0) for s, ti in zip(states, t)))
    ok = worst_dist <= 1e-6 and worst_drift <= 1e-8
    criterion(12, "evolve vs steady state", ok, f"distance {worst_dist:.1e}, drift/unit t {worst_drift:.1e}")
    assert ok
