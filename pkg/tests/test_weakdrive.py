import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockade.model import SystemParams
from blockade.weakdrive import (
    analytic_g2,
    antibunching_window,
    cooperativities,
    g2_biquadratic_approx,
    window_asymptote,
)

FIG2 = SystemParams(g=1.0, J=0.1, kappa2=1.0, gamma=0.01)
positive = st.floats(0.01, 20.0)


def test_cooperativity_values():
    c = cooperativities(FIG2)
    assert c.c2 == pytest.approx(0.04)
    assert c.c3 == pytest.approx(200.0)
    assert cooperativities(FIG2.replace(J=0.0)).c2 == 0


def test_zero_denominator_rejected():
    with pytest.raises(ValueError):
        cooperativities(SystemParams(kappa2=0.0, Delta=0.0))
    with pytest.raises(ValueError):
        analytic_g2(FIG2, 3)


def test_closed_form_values():
    assert analytic_g2(FIG2, 2) == pytest.approx((1.04 / 201.04) ** 2, rel=1e-12)
    assert analytic_g2(FIG2, 2) == pytest.approx(2.676e-5, rel=1e-3)
    assert analytic_g2(FIG2, 1) == pytest.approx((1 + 0.04 * 200 / 201.04) ** 2, rel=1e-12)
    assert analytic_g2(FIG2, 1) == pytest.approx(1.0812, abs=1e-4)


def test_linear_limit():
    p = FIG2.replace(g=0.0)
    assert analytic_g2(p, 1) == 1.0 and analytic_g2(p, 2) == 1.0


def test_biquadratic_approximation():
    assert g2_biquadratic_approx(FIG2) == pytest.approx((1.04 / 200) ** 2, rel=1e-12)
    assert g2_biquadratic_approx(FIG2) == pytest.approx(2.704e-5, rel=1e-3)
    assert g2_biquadratic_approx(FIG2) / g2_biquadratic_approx(FIG2.replace(g=2.0)) == pytest.approx(16, rel=1e-14)
    ratios = [g2_biquadratic_approx(FIG2.replace(g=g)) / analytic_g2(FIG2.replace(g=g), 2) for g in (1, 10, 100)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(ValueError):
        g2_biquadratic_approx(FIG2.replace(Delta=0.1))
    with pytest.raises(ValueError):
        g2_biquadratic_approx(FIG2.replace(g=0.0))


@given(positive, positive, positive, positive)
def test_bunching_and_antibunching_at_resonance(g, J, kappa2, gamma):
    p = SystemParams(g=g, J=J, kappa2=kappa2, gamma=gamma)
    assert analytic_g2(p, 1) > 1
    assert analytic_g2(p, 2) < 1


def test_window_example():
    w = antibunching_window(FIG2.replace(g=10.0), 4)
    assert w.antibunched_at_center
    assert w.width == pytest.approx(10 / np.sqrt(3), rel=0.1)
    assert abs(abs(w.upper) - abs(w.lower)) <= 1e-9
    assert float(w) == w.width


def test_window_shrinks_with_threshold():
    p = FIG2.replace(g=10.0)
    widths = [antibunching_window(p, z).width for z in (2, 4, 8, 32, 128, 1024)]
    assert all(b < a for a, b in zip(widths, widths[1:]))


@pytest.mark.parametrize("zeta", [2, 4, 8])
def test_window_linear_in_g(zeta):
    # J = 0.1 at g = 10 and 100 puts J/g at 1e-2 and 1e-3
    r = [antibunching_window(FIG2.replace(g=g), zeta).width / g for g in (10.0, 100.0)]
    assert r[0] == pytest.approx(r[1], rel=0.02)
    assert r[1] == pytest.approx(window_asymptote(1.0, zeta), rel=0.02)


def test_empty_window_is_flagged():
    w = antibunching_window(FIG2.replace(g=0.01), 8)
    assert w.width == 0 and not w.antibunched_at_center
    with pytest.raises(ValueError):
        antibunching_window(FIG2, 1.0)
