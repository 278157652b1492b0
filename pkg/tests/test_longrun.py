import mpmath
import numpy as np
import pytest

from fcpreg.core import PairedFunctionalSample, SampleGrid
from fcpreg.errors import InvalidBandwidth
from fcpreg.longrun import (
    ScoreMatrix,
    bartlett_weight,
    compute_scores,
    default_bandwidth,
    default_max_lag,
    estimate_longrun_kernel,
    qs_weight,
)
from fcpreg.regression import fit_concurrent_ols
from tests.conftest import random_sample


def qs_reference(x: float) -> float:
    mpmath.mp.dps = 50
    x = mpmath.mpf(x)
    a = 6 * mpmath.pi * x / 5
    return float(25 / (12 * mpmath.pi**2 * x**2) * (mpmath.sin(a) / a - mpmath.cos(a)))


def direct_kernel(z, h, max_lag, weight):
    n, T = z.shape
    c = np.zeros((T, T))
    for s in range(T):
        for t in range(T):
            acc = sum(z[k, s] * z[k, t] for k in range(n)) / n
            for lag in range(1, max_lag + 1):
                fwd = sum(z[k, s] * z[k + lag, t] for k in range(n - lag)) / n
                bwd = sum(z[k, t] * z[k + lag, s] for k in range(n - lag)) / n
                acc += weight(lag / h) * (fwd + bwd)
            c[s, t] = acc
    return c


class TestScores:
    def test_zero_residuals_give_zero_scores(self, rng):
        x = rng.normal(size=(8, 3))
        fit = fit_concurrent_ols(PairedFunctionalSample.from_arrays(x, 3 * x - 1))
        np.testing.assert_allclose(compute_scores(fit).values, 0.0, atol=1e-12)

    def test_hand_products(self):
        x = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 5.0]])
        y = np.array([[2.0, 1.0], [3.0, -1.0], [5.0, 4.0]])
        fit = fit_concurrent_ols(PairedFunctionalSample.from_arrays(x, y))
        z = compute_scores(fit).values
        # first column: centered x (-1, 0, 1), residuals (1/6, -1/3, 1/6)
        np.testing.assert_allclose(z[:, 0], [-1 / 6, 0.0, 1 / 6], atol=1e-14)
        np.testing.assert_allclose(z, fit.centered_x * fit.residuals, rtol=0, atol=0)

    def test_column_sums_vanish(self, rng):
        s = random_sample(rng, 40, 6)
        z = compute_scores(fit_concurrent_ols(s)).values
        assert np.abs(z.sum(axis=0)).max() <= 1e-8 * s.n * np.abs(z).max()


class TestWeights:
    def test_qs_at_zero(self):
        assert qs_weight(0.0) == 1.0

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.7, 1e-4, 3e-3, 0.026, 0.027])
    def test_qs_matches_high_precision(self, x):
        assert qs_weight(x) == pytest.approx(qs_reference(x), rel=1e-13, abs=1e-14)

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.3, 7.0])
    def test_qs_symmetric(self, x):
        assert qs_weight(-x) == qs_weight(x)

    def test_qs_vectorised(self):
        xs = np.array([0.0, 0.5, -0.5])
        np.testing.assert_allclose(qs_weight(xs), [1.0, qs_reference(0.5), qs_reference(0.5)], rtol=1e-13)

    def test_qs_decays(self):
        xs = np.array([5.0, 10.0, 50.0])
        assert np.all(np.abs(qs_weight(xs)) < 25 / (12 * np.pi**2 * xs**2) * 1.01 + 1e-15)

    def test_bartlett(self):
        np.testing.assert_allclose(bartlett_weight([0.0, 0.25, -0.5, 1.0, 3.0]), [1, 0.75, 0.5, 0, 0])


class TestKernel:
    def test_lag_zero_is_gram_matrix(self, rng):
        z = rng.normal(size=(15, 4))
        k = estimate_longrun_kernel(z, SampleGrid.uniform(4), h=3.0, max_lag=0)
        np.testing.assert_allclose(k.c_hat, z.T @ z / 15, rtol=1e-14)
        assert np.array_equal(k.c_hat, k.c_hat.T)

    def test_zero_scores(self):
        k = estimate_longrun_kernel(np.zeros((10, 3)), SampleGrid.uniform(3))
        assert np.all(k.c_hat == 0)

    @pytest.mark.parametrize("window,weight", [("quadratic_spectral", qs_weight), ("bartlett", bartlett_weight)])
    def test_matches_direct_summation(self, rng, window, weight):
        z = rng.normal(size=(4, 2))
        k = estimate_longrun_kernel(ScoreMatrix(z), SampleGrid.uniform(2), h=2.0, max_lag=2, window=window)
        np.testing.assert_allclose(k.c_hat, direct_kernel(z, 2.0, 2, weight), rtol=0, atol=1e-12)

    def test_symmetric_entrywise(self, rng):
        z = rng.normal(size=(50, 9))
        k = estimate_longrun_kernel(z, SampleGrid.uniform(9))
        assert np.array_equal(k.c_hat, k.c_hat.T)

    @pytest.mark.parametrize("h", [0.0, -1.0, float("nan")])
    def test_invalid_bandwidth(self, h):
        with pytest.raises(InvalidBandwidth):
            estimate_longrun_kernel(np.ones((5, 2)), SampleGrid.uniform(2), h=h)

    def test_defaults(self, rng):
        assert default_bandwidth(300) == 5.0
        assert default_max_lag(300, 5.0) == 15
        assert default_max_lag(10, 5.0) == 9
        k = estimate_longrun_kernel(rng.normal(size=(300, 3)), SampleGrid.uniform(3))
        assert (k.bandwidth_h, k.max_lag, k.window) == (5.0, 15, "quadratic_spectral")

    def test_iid_scores_diagonal_is_unbiased(self):
        # Z = a * b with independent normals: Var Z(t) = sa^2 * sb^2
        rng = np.random.default_rng(7)
        sa = np.array([1.0, 2.0, 0.5])
        sb = np.array([1.5, 1.0, 3.0])
        grid = SampleGrid.uniform(3)
        diag = np.zeros(3)
        reps = 10_000
        for _ in range(reps):
            z = rng.normal(size=(20, 3)) * sa * rng.normal(size=(20, 3)) * sb
            diag += np.diag(estimate_longrun_kernel(z, grid, h=1.0, max_lag=0).c_hat)
        np.testing.assert_allclose(diag / reps, (sa * sb) ** 2, rtol=0.05)

    def test_doubling_max_lag_bounded_by_tail_weights(self, rng):
        z = rng.normal(size=(300, 5))
        grid = SampleGrid.uniform(5)
        h = default_bandwidth(300)
        base = estimate_longrun_kernel(z, grid, h=h)
        doubled = estimate_longrun_kernel(z, grid, h=h, max_lag=2 * base.max_lag)
        lags = np.arange(base.max_lag + 1, 2 * base.max_lag + 1)
        tail = np.abs(qs_weight(lags / h))
        assert tail.max() < 0.03
        bound = 2 * tail.sum() * np.abs(z).max() ** 2
        assert np.abs(doubled.c_hat - base.c_hat).max() <= bound
