import numpy as np
import pytest

from fcpreg.core import SampleGrid
from fcpreg.errors import ZeroTrace
from fcpreg.longrun import LongRunKernel, compute_scores, estimate_longrun_kernel
from fcpreg.regression import fit_concurrent_ols
from fcpreg.simulation import DgpConfig, generate_dataset
from fcpreg.spectral import EigenSystem, choose_truncation, eigendecompose, truncate


def kernel(grid: SampleGrid, c: np.ndarray) -> LongRunKernel:
    return LongRunKernel(grid, np.asarray(c, float), 1.0, 0)


def scan_truncation(eigenvalues, trace, fraction):
    acc = 0.0
    for i, lam in enumerate(eigenvalues, start=1):
        acc += lam
        if acc >= fraction * trace:
            return i
    return None


def smooth_kernel(grid: SampleGrid) -> np.ndarray:
    t = grid.points
    f1 = np.sqrt(2) * np.sin(np.pi * t)
    f2 = np.sqrt(2) * np.cos(2 * np.pi * t)
    return 3.0 * np.outer(f1, f1) + 1.0 * np.outer(f2, f2) + 0.2 * np.exp(-np.subtract.outer(t, t) ** 2)


class TestEigendecompose:
    def test_rank_one(self):
        g = SampleGrid.uniform(51)
        phi = np.sin(np.pi * g.points) + 0.3 * g.points
        phi /= np.sqrt(g.weights @ phi**2)
        eigs = eigendecompose(kernel(g, np.outer(phi, phi)))
        assert eigs.eigenvalues[0] == pytest.approx(1.0, abs=1e-8)
        assert np.all(np.abs(eigs.eigenvalues[1:]) <= 1e-8)
        np.testing.assert_allclose(eigs.eigenfunctions[:, 0], phi, atol=1e-8)

    def test_zero_kernel(self):
        g = SampleGrid.uniform(7)
        eigs = eigendecompose(kernel(g, np.zeros((7, 7))))
        assert np.all(eigs.eigenvalues == 0) and eigs.trace == 0.0

    def test_min_kernel_spectrum(self):
        g = SampleGrid.uniform(201)
        eigs = eigendecompose(kernel(g, np.minimum.outer(g.points, g.points)))
        k = np.arange(1, 6)
        expected = 4 / ((2 * k - 1) ** 2 * np.pi**2)
        np.testing.assert_allclose(eigs.eigenvalues[:5], expected, rtol=0.01)

    def test_descending_and_clipped(self, rng):
        g = SampleGrid.uniform(15)
        a = rng.normal(size=(15, 15))
        eigs = eigendecompose(kernel(g, a + a.T))
        assert np.all(np.diff(eigs.eigenvalues) <= 0)
        assert np.all(eigs.eigenvalues >= 0)
        assert eigs.negative_mass > 0
        np.testing.assert_array_equal(eigs.eigenvalues, np.clip(eigs.raw_eigenvalues, 0, None))

    @pytest.mark.parametrize("points", [None, [0.0, 0.05, 0.3, 0.31, 0.7, 0.9, 1.0]])
    def test_weighted_orthonormality(self, rng, points):
        g = SampleGrid.uniform(21) if points is None else SampleGrid(points)
        a = rng.normal(size=(len(g), len(g)))
        eigs = eigendecompose(kernel(g, a @ a.T))
        phi = eigs.eigenfunctions
        gram = phi.T @ (g.weights[:, None] * phi)
        assert np.abs(gram - np.eye(len(g))).max() <= 1e-8

    def test_reconstruction_of_psd_projection(self, rng):
        g = SampleGrid([0.0, 0.1, 0.15, 0.4, 0.6, 0.8, 0.95, 1.0])
        a = rng.normal(size=(8, 8))
        c = a + a.T
        eigs = eigendecompose(kernel(g, c))
        recon = (eigs.eigenfunctions * eigs.eigenvalues) @ eigs.eigenfunctions.T
        # PSD projection of the weighted operator, mapped back to kernel values
        sw = np.sqrt(g.weights)
        vals, vecs = np.linalg.eigh(sw[:, None] * c * sw[None, :])
        proj = (vecs * np.clip(vals, 0, None)) @ vecs.T / np.outer(sw, sw)
        scale = np.abs(c).max()
        assert np.abs(recon - proj).max() <= 1e-6 * scale

    def test_trace_is_weighted_diagonal(self, rng):
        g = SampleGrid([0.0, 0.2, 0.5, 1.0])
        a = rng.normal(size=(4, 4))
        eigs = eigendecompose(kernel(g, a @ a.T))
        assert eigs.trace == pytest.approx(sum(w * a[j] @ a[j] for j, w in enumerate(g.weights)), rel=1e-14)
        # for a PSD kernel the weighted trace equals the eigenvalue sum
        assert eigs.trace == pytest.approx(eigs.eigenvalues.sum(), rel=1e-12)

    def test_clipped_trace_bounds(self, rng):
        g = SampleGrid.uniform(12)
        a = rng.normal(size=(12, 12))
        eigs = eigendecompose(kernel(g, a + a.T))
        assert 0 <= eigs.eigenvalues.sum() <= np.abs(eigs.raw_eigenvalues).sum()

    @pytest.mark.parametrize("c", [0.01, 7.5])
    def test_scale_equivariance(self, c):
        g = SampleGrid.uniform(41)
        base = smooth_kernel(g)
        e0 = eigendecompose(kernel(g, base))
        e1 = eigendecompose(kernel(g, c * base))
        np.testing.assert_allclose(e1.eigenvalues[:3], c * e0.eigenvalues[:3], rtol=1e-10)
        for k in range(3):
            a, b = e1.eigenfunctions[:, k], e0.eigenfunctions[:, k]
            assert min(np.abs(a - b).max(), np.abs(a + b).max()) <= 1e-8

    def test_sign_convention(self, rng):
        g = SampleGrid.uniform(9)
        a = rng.normal(size=(9, 9))
        phi = eigendecompose(kernel(g, a @ a.T)).eigenfunctions
        cols = np.arange(9)
        assert np.all(phi[np.abs(phi).argmax(axis=0), cols] > -1e-8 * np.abs(phi).max(axis=0))


class TestTruncation:
    def pairs(self, eigenvalues, trace=1.0):
        g = SampleGrid.uniform(len(eigenvalues))
        return EigenSystem.from_pairs(g, eigenvalues, np.eye(len(eigenvalues)), trace=trace)

    @pytest.mark.parametrize(
        "eigenvalues,m", [([0.9, 0.1], 1), ([0.5, 0.4, 0.1], 2), ([0.85, 0.15], 1), ([0.2] * 5, 5)]
    )
    def test_examples(self, eigenvalues, m):
        assert choose_truncation(self.pairs(eigenvalues)) == m

    def test_unreachable_target_uses_positive_count(self):
        eigs = truncate(self.pairs([0.5, 0.2, 0.0], trace=1.0))
        assert eigs.m == 2
        assert eigs.explained_fraction == pytest.approx(0.7)

    def test_zero_trace(self):
        with pytest.raises(ZeroTrace) as info:
            choose_truncation(self.pairs([0.0, 0.0], trace=0.0))
        assert info.value.stage == "spectral"

    def test_tiny_trace_relative_to_scale(self):
        with pytest.raises(ZeroTrace):
            choose_truncation(self.pairs([1e-20, 0.0], trace=1e-20), scale=1.0)
        assert choose_truncation(self.pairs([1e-20, 0.0], trace=1e-20)) == 1

    def test_simulated_null_kernel_matches_scan(self):
        ds = generate_dataset(DgpConfig(n=300, design="iid", seed=11))
        fit = fit_concurrent_ols(ds.sample)
        eigs = eigendecompose(estimate_longrun_kernel(compute_scores(fit), ds.sample.grid))
        m = choose_truncation(eigs)
        assert m == scan_truncation(eigs.eigenvalues.tolist(), eigs.trace, 0.85)
        trunc = eigs.with_truncation(m)
        assert trunc.explained_fraction >= 0.85
        assert eigs.eigenvalues[: m - 1].sum() < 0.85 * eigs.trace
