"""Lag-window estimation of the long-run covariance kernel of the scores.

The scores are ``Z_i(t) = (X_i(t) - mu_x(t)) * eps_i(t)``. The estimator is

    C(s, t) = c_0(s, t) + sum_{l=1}^{L} w(l / h) * (c_l(s, t) + c_l(t, s)),
    c_l(s, t) = n^{-1} sum_{k=1}^{n-l} Z_k(s) Z_{k+l}(t),

with a Quadratic-Spectral (default) or Bartlett lag window ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike

from fcpreg.core import FloatArray, SampleGrid
from fcpreg.errors import InvalidBandwidth, InvalidInput
from fcpreg.regression import ConcurrentFit

WindowName = Literal["quadratic_spectral", "bartlett"]


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    values: FloatArray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class LongRunKernel:
    """Discretised kernel ``c_hat[j, k] = C(t_j, t_k)``.

    Not necessarily positive semidefinite; negative eigenvalues are clipped
    in :func:`fcpreg.spectral.eigendecompose`.
    """

    grid: SampleGrid
    c_hat: FloatArray
    bandwidth_h: float
    max_lag: int
    window: str = "quadratic_spectral"


def compute_scores(fit: ConcurrentFit) -> ScoreMatrix:
    return ScoreMatrix(fit.centered_x * fit.residuals)


def qs_weight(x: ArrayLike) -> FloatArray | float:
    """Quadratic-Spectral window, ``w(0) = 1``.

    Near zero the closed form cancels catastrophically, so for
    ``a = 6 pi |x| / 5 < 0.1`` the power series in ``a`` is used instead.
    """
    arr = np.asarray(x, dtype=np.float64)
    a = 6.0 * np.pi * np.abs(arr) / 5.0
    out = np.empty_like(a)
    small = a < 0.1
    big = ~small
    ab = a[big]
    xb = arr[big]
    out[big] = 25.0 / (12.0 * np.pi**2 * xb**2) * (np.sin(ab) / ab - np.cos(ab))
    # 3/a^2 (sin(a)/a - cos(a)) = sum_k (-1)^(k+1) 6k a^(2k-2) / (2k+1)!
    a2 = a[small] ** 2
    out[small] = 1.0 - a2 * (1 / 10 - a2 * (1 / 280 - a2 * (1 / 15120 - a2 / 1330560)))
    if out.ndim == 0:
        return float(out)
    return out


def bartlett_weight(x: ArrayLike) -> FloatArray | float:
    out = np.maximum(0.0, 1.0 - np.abs(np.asarray(x, dtype=np.float64)))
    if out.ndim == 0:
        return float(out)
    return out


WINDOWS: dict[str, Callable[[ArrayLike], FloatArray | float]] = {
    "quadratic_spectral": qs_weight,
    "qs": qs_weight,
    "bartlett": bartlett_weight,
}


def default_bandwidth(n: int) -> float:
    return float(math.ceil(n**0.25))


def default_max_lag(n: int, h: float) -> int:
    return min(n - 1, math.ceil(3 * h))


def autocovariance(scores: FloatArray, lag: int) -> FloatArray:
    """``c_l[j, k] = n^{-1} sum_{i} Z_i(t_j) Z_{i+l}(t_k)``."""
    n = scores.shape[0]
    return scores[: n - lag].T @ scores[lag:] / n


def estimate_longrun_kernel(
    scores: ScoreMatrix | FloatArray,
    grid: SampleGrid,
    h: float | None = None,
    max_lag: int | None = None,
    window: WindowName | str = "quadratic_spectral",
) -> LongRunKernel:
    """Estimate the long-run covariance kernel of ``scores``.

    Parameters
    ----------
    scores : ScoreMatrix or ndarray, shape (n, T)
    grid : SampleGrid
    h : float, optional
        Bandwidth; defaults to ``ceil(n ** 0.25)``.
    max_lag : int, optional
        Last lag included; defaults to ``min(n - 1, ceil(3 h))``.
    window : {"quadratic_spectral", "bartlett"}

    Raises
    ------
    InvalidBandwidth
        If ``h <= 0`` or is not finite.
    """
    z = scores.values if isinstance(scores, ScoreMatrix) else np.asarray(scores, float)
    n = z.shape[0]
    if h is None:
        h = default_bandwidth(n)
    if not (math.isfinite(h) and h > 0):
        raise InvalidBandwidth(f"bandwidth must be positive, got {h}")
    if max_lag is None:
        max_lag = default_max_lag(n, h)
    if not 0 <= max_lag <= n - 1:
        raise InvalidInput(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    try:
        weight = WINDOWS[window]
    except KeyError:
        raise InvalidInput(f"unknown lag window {window!r}") from None

    c = autocovariance(z, 0)
    for lag in range(1, max_lag + 1):
        w = weight(lag / h)
        if w == 0.0:
            continue
        cl = autocovariance(z, lag)
        c += w * (cl + cl.T)
    # c_0 is symmetric only up to rounding in the BLAS product
    c = 0.5 * (c + c.T)
    c.setflags(write=False)
    name = "quadratic_spectral" if window == "qs" else window
    return LongRunKernel(grid, c, float(h), int(max_lag), name)
