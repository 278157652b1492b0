"""Quadrature-weighted Mercer eigendecomposition and variance-fraction truncation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from fcpreg.core import FloatArray, SampleGrid
from fcpreg.errors import EigenFailure, InvalidInput, ZeroTrace
from fcpreg.longrun import LongRunKernel

DEFAULT_FRACTION = 0.85
ZERO_TRACE_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenpairs of a discretised kernel operator.

    Attributes
    ----------
    eigenvalues : ndarray, shape (K,)
        Descending, negative values clipped to zero.
    eigenfunctions : ndarray, shape (T, K)
        Column ``l`` is ``phi_l`` on the grid, orthonormal under the grid
        quadrature weights.
    trace : float
        Quadrature integral of the kernel diagonal (before clipping).
    raw_eigenvalues : ndarray
        Unclipped eigenvalues, kept for diagnostics.
    m : int or None
        Truncation level, set by :func:`truncate`.
    explained_fraction : float or None
        ``sum(eigenvalues[:m]) / trace`` clamped to [0, 1].
    """

    grid: SampleGrid
    eigenvalues: FloatArray
    eigenfunctions: FloatArray
    trace: float
    raw_eigenvalues: FloatArray
    m: int | None = None
    explained_fraction: float | None = None

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0))

    @property
    def negative_mass(self) -> float:
        return float(-self.raw_eigenvalues[self.raw_eigenvalues < 0].sum())

    def with_truncation(self, m: int) -> EigenSystem:
        if not 1 <= m <= self.eigenvalues.size:
            raise InvalidInput(f"truncation level {m} out of range")
        frac = float(self.eigenvalues[:m].sum() / self.trace) if self.trace > 0 else 0.0
        return dataclasses.replace(self, m=m, explained_fraction=min(max(frac, 0.0), 1.0))

    @classmethod
    def from_pairs(
        cls,
        grid: SampleGrid,
        eigenvalues,
        eigenfunctions,
        trace: float | None = None,
        m: int | None = None,
    ) -> EigenSystem:
        """Build an eigensystem from user-supplied pairs, e.g. a stored JSON."""
        lam = np.asarray(eigenvalues, dtype=np.float64)
        phi = np.asarray(eigenfunctions, dtype=np.float64).reshape(len(grid), lam.size)
        order = np.argsort(-lam, kind="stable")
        lam, phi = lam[order], phi[:, order]
        raw = lam.copy()
        lam = np.clip(lam, 0.0, None)
        if trace is None:
            trace = float(lam.sum())
        eig = cls(grid, lam, phi, float(trace), raw)
        return eig if m is None else eig.with_truncation(m)


def _fix_signs(phi: FloatArray) -> FloatArray:
    # first entry within rounding of the column maximum, so mirrored near-ties
    # resolve the same way under perturbations of the kernel
    a = np.abs(phi)
    idx = np.argmax(a >= a.max(axis=0) * (1 - 1e-8), axis=0)
    signs = np.sign(phi[idx, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return phi * signs


def eigendecompose(kernel: LongRunKernel) -> EigenSystem:
    """Solve the discretised integral eigenproblem of ``kernel``.

    Diagonalises ``W^{1/2} C W^{1/2}`` with ``W = diag(weights)`` and maps
    eigenvectors back by ``phi = W^{-1/2} v``. Grid points with zero weight
    contribute nothing to the operator; their eigenfunction values are
    recovered from the Nystrom extension.
    """
    grid = kernel.grid
    w = grid.weights
    c = kernel.c_hat
    sw = np.sqrt(w)
    mat = sw[:, None] * c * sw[None, :]
    mat = 0.5 * (mat + mat.T)
    try:
        raw, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"symmetric eigensolver failed: {exc}") from exc
    raw = raw[::-1].copy()
    vecs = vecs[:, ::-1]
    lam = np.clip(raw, 0.0, None)

    phi = np.empty_like(vecs)
    pos = w > 0
    phi[pos] = vecs[pos] / sw[pos, None]
    if not pos.all():
        # Nystrom: phi(t) = lambda^{-1} sum_k w_k C(t, t_k) phi(t_k)
        with np.errstate(divide="ignore", invalid="ignore"):
            ext = (c[~pos][:, pos] * w[pos]) @ phi[pos] / raw
        phi[~pos] = np.where(np.isfinite(ext), ext, 0.0)
    phi = _fix_signs(phi)

    trace = float(w @ np.diag(c))
    return EigenSystem(grid, lam, phi, trace, raw)


def choose_truncation(
    eigs: EigenSystem, fraction: float = DEFAULT_FRACTION, scale: float | None = None
) -> int:
    """Smallest ``M`` with ``sum(eigenvalues[:M]) >= fraction * trace``.

    When clipping removes too much mass for the target to be reachable, the
    number of strictly positive eigenvalues is returned instead; the
    shortfall shows up in ``explained_fraction``.

    ``scale`` is the magnitude a nondegenerate trace would have (the detector
    passes the product of the regressor and response variances). Without it
    the largest absolute raw eigenvalue is used.

    Raises
    ------
    ZeroTrace
        If ``trace <= 1e-14 * scale``.
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidInput(f"fraction must lie in (0, 1), got {fraction}")
    if scale is None:
        scale = float(np.abs(eigs.raw_eigenvalues).max(initial=0.0))
    if eigs.trace <= ZERO_TRACE_RTOL * scale or eigs.trace <= 0.0:
        raise ZeroTrace(f"kernel trace {eigs.trace:.3e} is not positive")
    cum = np.cumsum(eigs.eigenvalues)
    reached = np.flatnonzero(cum >= fraction * eigs.trace)
    if reached.size:
        return int(reached[0]) + 1
    return max(eigs.n_positive, 1)


def truncate(
    eigs: EigenSystem, fraction: float = DEFAULT_FRACTION, scale: float | None = None
) -> EigenSystem:
    return eigs.with_truncation(choose_truncation(eigs, fraction, scale))
