"""End-to-end slope-change test for paired functional time series."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np

from fcpreg.core import PairedFunctionalSample, integrate
from fcpreg.cusum import CusumField, CusumStatistics, compute_cusum_field, compute_statistics
from fcpreg.errors import InvalidInput, TooFewCurves
from fcpreg.longrun import LongRunKernel, compute_scores, estimate_longrun_kernel
from fcpreg.montecarlo import (
    DEFAULT_R,
    DEFAULT_Z_RESOLUTION,
    LimitDraws,
    critical_value,
    draw_limit_distributions,
    p_value,
)
from fcpreg.regression import ConcurrentFit, fit_concurrent_ols
from fcpreg.spectral import DEFAULT_FRACTION, EigenSystem, eigendecompose, truncate

NormChoice = Literal["sup", "l2", "both"]
_N_TOP_EIGENVALUES = 10


@dataclass(frozen=True)
class TestConfig:
    """Settings for :func:`run_test`.

    ``bandwidth_h`` and ``max_lag`` default to ``ceil(n ** 0.25)`` and
    ``min(n - 1, ceil(3 h))`` when left as ``None``.
    """

    __test__ = False  # not a pytest class

    norm: NormChoice = "both"
    rho: float = 0.05
    R: int = DEFAULT_R
    seed: int = 0
    bandwidth_h: float | None = None
    max_lag: int | None = None
    weight_window: str = "quadratic_spectral"
    truncation_fraction: float = DEFAULT_FRACTION
    z_resolution: int = DEFAULT_Z_RESOLUTION
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.norm not in ("sup", "l2", "both"):
            raise InvalidInput(f"norm must be sup, l2 or both, got {self.norm!r}")
        if not 0.0 < self.rho < 1.0:
            raise InvalidInput(f"rho must lie in (0, 1), got {self.rho}")
        if self.R < 1:
            raise InvalidInput("R must be at least 1")
        if not 0.0 < self.truncation_fraction < 1.0:
            raise InvalidInput("truncation_fraction must lie in (0, 1)")
        if self.z_resolution < 2:
            raise InvalidInput("z_resolution must be at least 2")

    @property
    def norms(self) -> tuple[str, ...]:
        return ("sup", "l2") if self.norm == "both" else (self.norm,)


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    norm: str
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    change_index: int
    change_fraction: float
    n: int
    m_used: int
    explained_fraction: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TestReport:
    """Per-norm results plus the intermediate objects they were built from."""

    __test__ = False

    results: dict[str, TestResult]
    fit: ConcurrentFit
    field: CusumField
    statistics: CusumStatistics
    kernel: LongRunKernel
    eigensystem: EigenSystem
    draws: dict[str, LimitDraws]

    def __getitem__(self, norm: str) -> TestResult:
        return self.results[norm]

    def to_dict(self) -> dict[str, Any]:
        return {"results": [r.to_dict() for r in self.results.values()]}


def score_scale(fit: ConcurrentFit, sample: PairedFunctionalSample) -> float:
    """Typical size of the kernel trace: integral of ``Var X(t) * Var Y(t)``."""
    grid = sample.grid
    var_x = (fit.centered_x**2).mean(axis=0)
    var_y = ((sample.y - fit.mu_y.values) ** 2).mean(axis=0)
    return integrate(var_x * var_y, grid)


def run_test(sample: PairedFunctionalSample, config: TestConfig | None = None) -> TestReport:
    """Test the null of a stable slope function.

    The pipeline is: pointwise OLS, CUSUM field and statistics, score
    long-run kernel, eigendecomposition with variance-fraction truncation,
    Monte Carlo limit draws, critical values and p-values. With
    ``norm="both"`` both statistics share one kernel, one spectrum and one
    bridge stream.

    Raises
    ------
    DegenerateRegressor, InvalidBandwidth, ZeroTrace, EigenFailure, InvalidTruncation
        Each carrying the ``stage`` attribute of the failing step.
    """
    config = config or TestConfig()
    n = sample.n

    fit = fit_concurrent_ols(sample)
    cusum_field = compute_cusum_field(fit)
    stats = compute_statistics(cusum_field)

    scores = compute_scores(fit)
    kernel = estimate_longrun_kernel(
        scores, sample.grid, config.bandwidth_h, config.max_lag, config.weight_window
    )
    eigs = truncate(
        eigendecompose(kernel), config.truncation_fraction, scale=score_scale(fit, sample)
    )
    draws = draw_limit_distributions(
        eigs, config.norms, config.R, config.z_resolution, config.seed, config.n_jobs
    )

    diagnostics = {
        "bandwidth_h": kernel.bandwidth_h,
        "max_lag": kernel.max_lag,
        "weight_window": kernel.window,
        "trace": eigs.trace,
        "positive_eigenvalue_mass": float(eigs.eigenvalues.sum()),
        "negative_eigenvalue_mass": eigs.negative_mass,
        "top_eigenvalues": eigs.eigenvalues[:_N_TOP_EIGENVALUES].tolist(),
        "R": config.R,
        "z_resolution": config.z_resolution,
        "seed": config.seed,
        "rho": config.rho,
    }
    observed = {
        "sup": (stats.stat_sup, stats.k_sup),
        "l2": (stats.stat_l2, stats.k_l2),
    }
    results = {}
    for nm in config.norms:
        stat, k = observed[nm]
        cv = critical_value(draws[nm], config.rho)
        results[nm] = TestResult(
            norm=nm,
            statistic=stat,
            critical_value=cv,
            p_value=p_value(draws[nm], stat),
            reject=bool(stat > cv),
            change_index=k,
            change_fraction=k / n,
            n=n,
            m_used=int(eigs.m),
            explained_fraction=float(eigs.explained_fraction),
            diagnostics=dict(diagnostics),
        )
    return TestReport(results, fit, cusum_field, stats, kernel, eigs, draws)


def trim_sample(
    sample: PairedFunctionalSample, head_fraction: float = 0.0, tail_fraction: float = 0.0
) -> PairedFunctionalSample:
    """Drop the first ``floor(head * n)`` and last ``floor(tail * n)`` curve pairs."""
    if head_fraction < 0 or tail_fraction < 0:
        raise InvalidInput("trim fractions must be nonnegative")
    n = sample.n
    head = math.floor(head_fraction * n)
    tail = math.floor(tail_fraction * n)
    if head_fraction + tail_fraction >= 1 or n - head - tail < 3:
        raise TooFewCurves(
            f"trimming {head} + {tail} of {n} curves leaves fewer than 3", stage="trim"
        )
    keep = slice(head, n - tail)
    return PairedFunctionalSample(sample.grid, np.array(sample.x[keep]), np.array(sample.y[keep]))
