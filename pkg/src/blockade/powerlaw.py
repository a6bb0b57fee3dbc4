"""Power-law fits ``y = prefactor * x**exponent`` by least squares on log-log data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    window: tuple[float, float]
    n_points: int

    def __call__(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(x, y, window: tuple[float, float] | None = None) -> PowerLawFit:
    """Fit a straight line to ``(log x, log y)`` over the points with ``x`` inside ``window``.

    Raises ``ValueError`` for fewer than three points or nonpositive data in the window.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"x and y differ in length ({x.size} vs {y.size})")
    if window is None:
        window = (float(np.min(x)), float(np.max(x))) if x.size else (np.nan, np.nan)
    lo, hi = window
    keep = (x >= lo) & (x <= hi)
    xs, ys = x[keep], y[keep]
    if xs.size < 3:
        raise ValueError(f"need at least 3 points in the window, got {xs.size}")
    if np.any(xs <= 0) or np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ValueError("power-law fit needs positive finite data inside the window")
    lx, ly = np.log(xs), np.log(ys)
    if np.ptp(lx) == 0:
        raise ValueError("all x values coincide")
    res = linregress(lx, ly)
    r2 = float(np.clip(res.rvalue ** 2, 0.0, 1.0)) if np.ptp(ly) > 0 else 1.0
    return PowerLawFit(float(res.slope), float(np.exp(res.intercept)), r2, (float(lo), float(hi)), int(xs.size))


class PowerLawRegressor(BaseEstimator, RegressorMixin):
    """Estimator wrapper around :func:`fit_power_law` for a single feature."""

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        x = np.asarray(X, dtype=float)
        if x.ndim == 2:
            if x.shape[1] != 1:
                raise ValueError("PowerLawRegressor takes a single feature")
            x = x[:, 0]
        result = fit_power_law(x, y, self.window)
        self.exponent_ = result.exponent
        self.prefactor_ = result.prefactor
        self.r_squared_ = result.r_squared
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        x = np.asarray(X, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        return self.prefactor_ * x ** self.exponent_
