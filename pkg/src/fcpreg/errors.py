"""Exception hierarchy for the change-point pipeline.

Every error carries the pipeline ``stage`` in which it was raised so that
failures inside :func:`fcpreg.detector.run_test` remain attributable.
"""

from __future__ import annotations


class FcpError(Exception):
    """Base class for all errors raised by :mod:`fcpreg`."""

    stage: str = "unknown"

    def __init__(self, message: str, *, stage: str | None = None) -> None:
        super().__init__(message)
        if stage is not None:
            self.stage = stage

    def __str__(self) -> str:
        return f"[{self.stage}] {self.args[0]}"


class InvalidInput(FcpError, ValueError):
    """Malformed arrays, grids, or configuration values."""

    stage = "input"


class DegenerateRegressor(FcpError):
    """The regressor has (numerically) zero variance at a grid point."""

    stage = "regression"

    def __init__(self, t_index: int, variance: float) -> None:
        self.t_index = t_index
        self.variance = variance
        super().__init__(
            f"DegenerateRegressor: sum of squared centered regressor values is "
            f"{variance:.3e} at grid index {t_index}"
        )


class InvalidBandwidth(FcpError, ValueError):
    stage = "longrun"


class ZeroTrace(FcpError):
    """The long-run kernel has zero trace, e.g. because all residuals vanish."""

    stage = "spectral"


class EigenFailure(FcpError):
    stage = "spectral"


class InvalidTruncation(FcpError, ValueError):
    stage = "montecarlo"


class TooFewCurves(FcpError, ValueError):
    stage = "trim"
