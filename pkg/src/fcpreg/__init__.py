"""CUSUM tests for structural breaks in the slope of a concurrent functional
linear regression between two functional time series."""

__version__ = "0.1.0"

from fcpreg.core import Curve, PairedFunctionalSample, SampleGrid, integrate, l2_norm, sup_abs
from fcpreg.cusum import CusumField, CusumStatistics, compute_cusum_field, compute_statistics
from fcpreg.detector import TestConfig, TestReport, TestResult, run_test, trim_sample
from fcpreg.errors import (
    DegenerateRegressor,
    EigenFailure,
    FcpError,
    InvalidBandwidth,
    InvalidTruncation,
    TooFewCurves,
    ZeroTrace,
)
from fcpreg.longrun import compute_scores, estimate_longrun_kernel, qs_weight
from fcpreg.montecarlo import critical_value, draw_limit_distribution, p_value, simulate_bridge
from fcpreg.regression import ConcurrentFit, fit_concurrent_ols
from fcpreg.spectral import EigenSystem, choose_truncation, eigendecompose, truncate

__all__ = [
    "ConcurrentFit",
    "Curve",
    "CusumField",
    "CusumStatistics",
    "DegenerateRegressor",
    "EigenFailure",
    "EigenSystem",
    "FcpError",
    "InvalidBandwidth",
    "InvalidTruncation",
    "PairedFunctionalSample",
    "SampleGrid",
    "TestConfig",
    "TestReport",
    "TestResult",
    "TooFewCurves",
    "ZeroTrace",
    "choose_truncation",
    "compute_cusum_field",
    "compute_scores",
    "compute_statistics",
    "critical_value",
    "draw_limit_distribution",
    "eigendecompose",
    "estimate_longrun_kernel",
    "fit_concurrent_ols",
    "integrate",
    "l2_norm",
    "p_value",
    "qs_weight",
    "run_test",
    "simulate_bridge",
    "sup_abs",
    "trim_sample",
    "truncate",
]
