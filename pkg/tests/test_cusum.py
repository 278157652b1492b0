import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcpreg.core import PairedFunctionalSample, SampleGrid
from fcpreg.cusum import CusumField, compute_cusum_field, compute_statistics
from fcpreg.regression import fit_concurrent_ols
from tests.conftest import random_sample


def brute_force_field(fit):
    n, T = fit.residuals.shape
    out = np.zeros((n + 1, T))
    for i in range(n + 1):
        for j in range(T):
            acc = 0.0
            for k in range(i):
                acc += fit.centered_x[k, j] * fit.residuals[k, j]
            out[i, j] = acc / np.sqrt(n)
    return out


def scan_statistics(field: CusumField):
    w = field.grid.weights
    best_sup, k_sup, best_l2, k_l2 = -1.0, None, -1.0, None
    for i in range(1, field.n + 1):
        row = field.values[i]
        s = max(abs(v) for v in row)
        l2 = np.sqrt(sum(wj * v * v for wj, v in zip(w, row)))
        if s > best_sup:
            best_sup, k_sup = s, i
        if l2 > best_l2:
            best_l2, k_l2 = l2, i
    return best_sup, k_sup, best_l2, k_l2


def test_noiseless_field_vanishes(rng):
    x = rng.normal(size=(12, 5))
    fit = fit_concurrent_ols(PairedFunctionalSample.from_arrays(x, 2 * x + 1))
    field = compute_cusum_field(fit)
    np.testing.assert_allclose(field.values, 0.0, atol=1e-12)
    stats = compute_statistics(field)
    assert stats.stat_sup < 1e-12 and stats.stat_l2 < 1e-12


def test_first_and_last_rows(rng):
    s = random_sample(rng, 60, 13)
    field = compute_cusum_field(fit_concurrent_ols(s))
    assert field.values.shape == (61, 13)
    assert np.all(field.values[0] == 0.0)
    scale = np.abs(field.values).max()
    assert np.abs(field.values[-1]).max() <= 1e-8 * scale


def test_matches_double_loop_on_5x4(rng):
    s = random_sample(rng, 5, 4)
    fit = fit_concurrent_ols(s)
    np.testing.assert_allclose(compute_cusum_field(fit).values, brute_force_field(fit), atol=1e-12)


def test_zero_field_statistics():
    field = CusumField(SampleGrid.uniform(4), np.zeros((6, 4)))
    stats = compute_statistics(field)
    assert (stats.stat_sup, stats.k_sup, stats.stat_l2, stats.k_l2) == (0.0, 1, 0.0, 1)


def test_single_support_field():
    g = SampleGrid.uniform(4)
    values = np.zeros((6, 4))
    values[3, 1] = 2.5  # i = 3, second grid point
    stats = compute_statistics(CusumField(g, values))
    assert stats.stat_sup == 2.5 and stats.k_sup == 3
    assert stats.stat_l2 == pytest.approx(2.5 * np.sqrt(g.weights[1]), rel=1e-15)
    assert stats.k_l2 == 3


def test_statistics_match_exhaustive_scan(rng):
    field = CusumField(SampleGrid.uniform(4), np.vstack([np.zeros(4), rng.normal(size=(5, 4))]))
    stats = compute_statistics(field)
    sup, ks, l2, kl = scan_statistics(field)
    assert stats.stat_sup == sup and stats.k_sup == ks
    assert stats.stat_l2 == pytest.approx(l2, rel=1e-14) and stats.k_l2 == kl


@pytest.mark.parametrize("c", [3.0, -0.25])
def test_response_scale_equivariance(rng, c):
    s = random_sample(rng, 40, 7)
    f0 = compute_cusum_field(fit_concurrent_ols(s))
    f1 = compute_cusum_field(fit_concurrent_ols(PairedFunctionalSample(s.grid, s.x, c * s.y)))
    np.testing.assert_allclose(f1.values, c * f0.values, rtol=1e-9, atol=1e-9 * abs(c) * np.abs(f0.values).max())
    s0, s1 = compute_statistics(f0), compute_statistics(f1)
    assert s1.stat_sup == pytest.approx(abs(c) * s0.stat_sup, rel=1e-10)
    assert s1.stat_l2 == pytest.approx(abs(c) * s0.stat_l2, rel=1e-10)
    assert (s1.k_sup, s1.k_l2) == (s0.k_sup, s0.k_l2)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 50), T=st.integers(2, 20), seed=st.integers(0, 2**32 - 1))
def test_prefix_sum_equals_double_loop(n, T, seed):
    s = random_sample(np.random.default_rng(seed), n, T)
    fit = fit_concurrent_ols(s)
    field = compute_cusum_field(fit)
    np.testing.assert_allclose(field.values, brute_force_field(fit), rtol=0, atol=1e-12 * max(1.0, np.abs(field.values).max()))
    stats = compute_statistics(field)
    assert 0 <= stats.stat_l2 <= stats.stat_sup * (1 + 1e-12)
