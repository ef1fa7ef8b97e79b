"""Small least-squares helpers for scaling analyses.

Three model shapes cover everything the experiment and congestion studies
report: a power law ``y = c * x**b`` (fit in log-log space), a proportional
law ``y = c * x``, and a quadratic coefficient ``y = c * x**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FitResult",
    "fit_power_law",
    "fit_proportional",
    "fit_quadratic_coefficient",
]


@dataclass(frozen=True)
class FitResult:
    """Fitted model with parameter estimates and standard errors.

    ``params`` and ``stderr`` are keyed by parameter name; ``residual_norm``
    is the L2 norm of residuals in the fitting space (log space for the
    power law).
    """

    model: str
    params: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)
    residual_norm: float = 0.0
    n_points: int = 0

    def __getitem__(self, name: str) -> float:
        return self.params[name]


def _as_positive_arrays(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fitting requires strictly positive data")
    return x, y


def fit_power_law(x, y) -> FitResult:
    """Least-squares fit of ``y = prefactor * x**exponent`` on log-log axes.

    Requires at least 3 strictly positive points.  Standard errors come
    from the usual OLS covariance with the residual variance estimated at
    ``len(x) - 2`` degrees of freedom (zero when the fit is exact or has
    no spare degrees of freedom).
    """
    x, y = _as_positive_arrays(x, y)
    if x.size < 3:
        raise ValueError(f"need at least 3 points for a power-law fit, got {x.size}")
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([lx, np.ones_like(lx)])
    coeffs, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope, intercept = coeffs
    residuals = ly - design @ coeffs
    rss = float(residuals @ residuals)
    dof = x.size - 2
    sigma2 = rss / dof if dof > 0 else 0.0
    centered = lx - lx.mean()
    sxx = float(centered @ centered)
    if sxx == 0.0:
        raise ValueError("all x values identical; exponent not identifiable")
    slope_err = math.sqrt(sigma2 / sxx)
    intercept_err = math.sqrt(sigma2 * (1.0 / x.size + lx.mean() ** 2 / sxx))
    prefactor = math.exp(intercept)
    return FitResult(
        model="power_law",
        params={"exponent": float(slope), "prefactor": prefactor},
        stderr={"exponent": slope_err, "prefactor": prefactor * intercept_err},
        residual_norm=math.sqrt(rss),
        n_points=int(x.size),
    )


def _fit_single_coefficient(x, y, power: int, model: str) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need at least 2 points with matching shapes")
    basis = x.astype(float) ** power
    denom = float(basis @ basis)
    if denom == 0.0:
        raise ValueError("degenerate design: all basis values are zero")
    coeff = float(basis @ y) / denom
    residuals = y - coeff * basis
    rss = float(residuals @ residuals)
    dof = x.size - 1
    sigma2 = rss / dof if dof > 0 else 0.0
    return FitResult(
        model=model,
        params={"coefficient": coeff},
        stderr={"coefficient": math.sqrt(sigma2 / denom)},
        residual_norm=math.sqrt(rss),
        n_points=int(x.size),
    )


def fit_proportional(x, y) -> FitResult:
    """Least-squares fit of ``y = coefficient * x``."""
    return _fit_single_coefficient(x, y, power=1, model="proportional")


def fit_quadratic_coefficient(x, y) -> FitResult:
    """Least-squares fit of ``y = coefficient * x**2``."""
    return _fit_single_coefficient(x, y, power=2, model="quadratic")
