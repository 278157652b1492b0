"""Pointwise OLS for the concurrent functional linear model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fcpreg.core import Curve, FloatArray, PairedFunctionalSample, SampleGrid
from fcpreg.errors import DegenerateRegressor

#: Per-observation threshold on the centered regressor sum of squares.
VARIANCE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class ConcurrentFit:
    """Full-sample null fit ``Y_i(t) = alpha(t) + gamma(t) X_i(t) + eps_i(t)``.

    Attributes
    ----------
    mu_x, mu_y : Curve
        Sample mean curves.
    gamma_hat, alpha_hat : Curve
        Pointwise slope and intercept estimates.
    residuals : ndarray, shape (n, T)
        OLS residual curves.
    centered_x : ndarray, shape (n, T)
        ``X_i(t) - mu_x(t)``.
    """

    grid: SampleGrid
    mu_x: Curve
    mu_y: Curve
    gamma_hat: Curve
    alpha_hat: Curve
    residuals: FloatArray
    centered_x: FloatArray

    @property
    def n(self) -> int:
        return self.residuals.shape[0]


def fit_concurrent_ols(sample: PairedFunctionalSample) -> ConcurrentFit:
    """Fit slope and intercept separately at every grid point.

    Raises
    ------
    DegenerateRegressor
        If ``sum_i (X_i(t_j) - mu_x(t_j))**2 <= 1e-12 * n`` for some ``j``.
    """
    x, y = sample.x, sample.y
    n = sample.n
    # two-pass: means first, then centered moments
    mu_x = x.mean(axis=0)
    mu_y = y.mean(axis=0)
    xc = x - mu_x
    yc = y - mu_y
    sxx = np.einsum("ij,ij->j", xc, xc)
    bad = np.flatnonzero(sxx <= VARIANCE_EPS * n)
    if bad.size:
        j = int(bad[0])
        raise DegenerateRegressor(j, float(sxx[j]))
    sxy = np.einsum("ij,ij->j", xc, yc)
    gamma = sxy / sxx
    alpha = mu_y - gamma * mu_x
    residuals = y - gamma * x - alpha

    grid = sample.grid
    residuals.setflags(write=False)
    xc.setflags(write=False)
    return ConcurrentFit(
        grid=grid,
        mu_x=Curve(grid, mu_x),
        mu_y=Curve(grid, mu_y),
        gamma_hat=Curve(grid, gamma),
        alpha_hat=Curve(grid, alpha),
        residuals=residuals,
        centered_x=xc,
    )
