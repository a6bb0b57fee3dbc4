import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from blockade.model import SystemParams
from blockade.powerlaw import PowerLawRegressor, fit_power_law
from blockade.weakdrive import analytic_g2


def test_exact_power_law():
    x = np.linspace(1, 10, 7)
    fit = fit_power_law(x, 3.0 * x**4)
    assert fit.exponent == pytest.approx(4.0, abs=1e-10)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit(2.0) == pytest.approx(48.0)


def test_weak_drive_correlation_slope():
    g = np.logspace(np.log10(5), np.log10(50), 25)
    y = [analytic_g2(SystemParams(g=v, J=0.1, kappa2=1.0, gamma=0.01), 2) for v in g]
    assert fit_power_law(g, y).exponent == pytest.approx(-4.0, abs=0.05)


def test_window_selects_points():
    x = np.array([0.1, 1.0, 2.0, 4.0, 100.0])
    y = np.array([5.0, 1.0, 4.0, 16.0, -1.0])
    fit = fit_power_law(x, y, window=(1.0, 4.0))
    assert fit.n_points == 3 and fit.exponent == pytest.approx(2.0)
    assert fit.window == (1.0, 4.0)


def test_errors():
    with pytest.raises(ValueError):
        fit_power_law([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [1, 0, 3])
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [1, 2])
    with pytest.raises(ValueError):
        fit_power_law([2, 2, 2], [1, 2, 3])


@given(st.lists(st.floats(0.01, 100.0), min_size=3, max_size=30, unique=True),
       st.integers(0, 2**32 - 1))
def test_r_squared_in_unit_interval(xs, seed):
    x = np.array(xs)
    y = np.exp(np.random.default_rng(seed).normal(size=x.size))
    fit = fit_power_law(x, y)
    assert 0.0 <= fit.r_squared <= 1.0


def test_regressor_interface():
    x = np.linspace(1, 5, 9).reshape(-1, 1)
    y = 2.0 * x[:, 0] ** -1.5
    model = PowerLawRegressor().fit(x, y)
    assert model.exponent_ == pytest.approx(-1.5)
    assert np.allclose(model.predict(x), y)
    assert model.score(x, y) == pytest.approx(1.0)
    assert clone(model).get_params() == {"window": None}
    with pytest.raises(ValueError):
        PowerLawRegressor().fit(np.ones((3, 2)), [1, 2, 3])
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        PowerLawRegressor().predict(x)
