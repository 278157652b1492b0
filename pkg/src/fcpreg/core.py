"""Grid, curve and sample containers plus quadrature helpers.

All curves live on a shared discretisation of the internal domain [0, 1].
Integrals are evaluated with quadrature weights that sum to one, and suprema
over ``t`` are taken over the grid points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from fcpreg.errors import InvalidInput

FloatArray = NDArray[np.float64]


def _frozen(a: ArrayLike) -> FloatArray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Ordered grid points on [0, 1] with quadrature weights.

    Parameters
    ----------
    points : array_like
        Strictly increasing points with ``points[0] == 0`` and
        ``points[-1] == 1``.
    weights : array_like, optional
        Nonnegative quadrature weights summing to one. Defaults to the
        trapezoid rule on ``points``.
    """

    points: FloatArray
    weights: FloatArray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        pts = _frozen(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidInput("grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InvalidInput("grid points must be strictly increasing")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise InvalidInput("grid must start at 0 and end at 1")
        if self.weights is None:
            w = trapezoid_weights(pts)
        else:
            w = _frozen(self.weights)
            if w.shape != pts.shape:
                raise InvalidInput("weights must match points in length")
            if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
                raise InvalidInput("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, size: int) -> SampleGrid:
        """Uniform grid ``t_j = j / (size - 1)`` with trapezoid weights."""
        if size < 2:
            raise InvalidInput("grid needs at least 2 points")
        return cls(np.linspace(0.0, 1.0, size))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampleGrid):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.weights, other.weights
        )

    def is_uniform(self) -> bool:
        return bool(np.allclose(self.points, np.linspace(0.0, 1.0, len(self)), atol=1e-12))


def trapezoid_weights(points: FloatArray) -> FloatArray:
    h = np.diff(points)
    w = np.zeros_like(points)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w / w.sum()


@dataclass(frozen=True, eq=False)
class Curve:
    """A function on ``grid`` represented by its values at the grid points."""

    grid: SampleGrid
    values: FloatArray

    def __post_init__(self) -> None:
        vals = _frozen(self.values)
        if vals.shape != (len(self.grid),):
            raise InvalidInput(
                f"curve has {vals.size} values but the grid has {len(self.grid)} points"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidInput("curve values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: SampleGrid, func) -> Curve:
        return cls(grid, func(grid.points))


@dataclass(frozen=True, eq=False)
class PairedFunctionalSample:
    """``n`` paired curves ``(X_i, Y_i)`` stored as two ``n x T`` matrices."""

    grid: SampleGrid
    x: FloatArray
    y: FloatArray

    def __post_init__(self) -> None:
        x = _frozen(self.x)
        y = _frozen(self.y)
        if x.ndim != 2 or x.shape != y.shape:
            raise InvalidInput(f"x and y must be equal-shape matrices, got {x.shape} and {y.shape}")
        if x.shape[1] != len(self.grid):
            raise InvalidInput(
                f"curves have {x.shape[1]} columns but the grid has {len(self.grid)} points"
            )
        if x.shape[0] < 3:
            raise InvalidInput("need at least 3 curve pairs")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInput("curve values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_arrays(cls, x: ArrayLike, y: ArrayLike, grid: SampleGrid | None = None):
        x = np.asarray(x, dtype=np.float64)
        if grid is None:
            grid = SampleGrid.uniform(x.shape[-1])
        return cls(grid, x, y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def T(self) -> int:  # noqa: N802
        return self.x.shape[1]


def _values(f: Curve | ArrayLike) -> FloatArray:
    return f.values if isinstance(f, Curve) else np.asarray(f, dtype=np.float64)


def integrate(f: Curve, grid: SampleGrid | None = None) -> float:
    """Quadrature approximation of the integral of ``f`` over [0, 1]."""
    grid = f.grid if isinstance(f, Curve) else grid
    return float(grid.weights @ _values(f))


def sup_abs(f: Curve | ArrayLike) -> tuple[float, int]:
    """Maximum absolute value and the 0-based index of its first occurrence."""
    a = np.abs(_values(f))
    j = int(np.argmax(a))
    return float(a[j]), j


def l2_norm(f: Curve, grid: SampleGrid | None = None) -> float:
    grid = f.grid if isinstance(f, Curve) else grid
    v = _values(f)
    return float(np.sqrt(grid.weights @ (v * v)))
