"""Regressor-weighted residual CUSUM process and its sup / L2 functionals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fcpreg.core import FloatArray, SampleGrid
from fcpreg.regression import ConcurrentFit


@dataclass(frozen=True, eq=False)
class CusumField:
    """CUSUM values on the jump points ``z = i/n``.

    ``values[i, j]`` holds the process at ``(i/n, t_j)`` for ``i = 0..n``;
    row 0 is the empty sum.
    """

    grid: SampleGrid
    values: FloatArray

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1


@dataclass(frozen=True)
class CusumStatistics:
    """Both test statistics and their maximisers ``k`` in ``1..n``."""

    stat_sup: float
    k_sup: int
    stat_l2: float
    k_l2: int


def compute_cusum_field(fit: ConcurrentFit) -> CusumField:
    scores = fit.centered_x * fit.residuals
    n, T = scores.shape
    values = np.zeros((n + 1, T))
    np.cumsum(scores, axis=0, out=values[1:])
    values /= np.sqrt(n)
    values.setflags(write=False)
    return CusumField(fit.grid, values)


def row_l2_norms(field: CusumField) -> FloatArray:
    """L2 norm over ``t`` of every row of the field (length ``n + 1``)."""
    v = field.values
    return np.sqrt(np.einsum("ij,ij,j->i", v, v, field.grid.weights))


def compute_statistics(field: CusumField) -> CusumStatistics:
    body = field.values[1:]
    row_sup = np.abs(body).max(axis=1)
    row_l2 = row_l2_norms(field)[1:]
    # argmax returns the first maximiser, i.e. the smallest k
    k_sup = int(np.argmax(row_sup))
    k_l2 = int(np.argmax(row_l2))
    return CusumStatistics(
        stat_sup=float(row_sup[k_sup]),
        k_sup=k_sup + 1,
        stat_l2=float(row_l2[k_l2]),
        k_l2=k_l2 + 1,
    )
