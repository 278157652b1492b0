"""Simulation of the limiting null distributions via a truncated KL expansion.

For each replication ``r`` we draw ``m`` independent Brownian bridges on the
grid ``z_k = k / z_resolution`` and evaluate

    sup:  max_{z, t} | sum_l sqrt(lambda_l) phi_l(t) B_l(z) |
    l2:   max_z sqrt( sum_l lambda_l B_l(z)**2 )

Replication ``r`` always uses the random stream seeded by ``(seed, r)``, so
results do not depend on how replications are split across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from joblib import Parallel, delayed

from fcpreg.core import FloatArray
from fcpreg.errors import InvalidInput, InvalidTruncation
from fcpreg.spectral import EigenSystem

Norm = Literal["sup", "l2"]
NORMS: tuple[Norm, ...] = ("sup", "l2")

DEFAULT_R = 1000
DEFAULT_Z_RESOLUTION = 1000
_CHUNK = 64


@dataclass(frozen=True, eq=False)
class LimitDraws:
    norm: Norm
    draws: FloatArray
    R: int
    z_resolution: int
    seed: int


def replication_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, r]))


def simulate_bridge(z_resolution: int, rng: np.random.Generator, size: int | None = None):
    """Brownian bridge values at ``k / z_resolution``, ``k = 0..z_resolution``.

    With ``size`` given, returns ``size`` independent bridges as rows.
    Both endpoints are exactly zero.
    """
    if z_resolution < 2:
        raise InvalidInput("z_resolution must be at least 2")
    rows = 1 if size is None else size
    g = rng.standard_normal((rows, z_resolution))
    b = np.zeros((rows, z_resolution + 1))
    np.cumsum(g, axis=1, out=b[:, 1:])
    b /= math.sqrt(z_resolution)
    z = np.arange(z_resolution + 1) / z_resolution
    bridge = b - z * b[:, -1:]
    return bridge[0] if size is None else bridge


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidInput(f"seed must be in [0, 2**64), got {seed}")
    return seed


def _draw_chunk(
    lam: FloatArray,
    loadings: FloatArray,
    norms: Sequence[Norm],
    z_resolution: int,
    seed: int,
    reps: range,
) -> dict[str, FloatArray]:
    m = lam.size
    out = {nm: np.empty(len(reps)) for nm in norms}
    for i, r in enumerate(reps):
        bridges = simulate_bridge(z_resolution, replication_rng(seed, r), size=m)
        if "sup" in out:
            field = np.dot(loadings, bridges)
            out["sup"][i] = max(field.max(), -field.min())
        if "l2" in out:
            out["l2"][i] = math.sqrt(float((lam @ (bridges * bridges)).max()))
    return out


def draw_limit_distributions(
    eigs: EigenSystem,
    norms: Sequence[Norm] = NORMS,
    R: int = DEFAULT_R,
    z_resolution: int = DEFAULT_Z_RESOLUTION,
    seed: int = 0,
    n_jobs: int = 1,
) -> dict[str, LimitDraws]:
    """Draw ``R`` replications of every requested limit functional.

    All requested norms are computed from the same bridges in each
    replication.

    Raises
    ------
    InvalidTruncation
        If ``eigs.m`` is unset, below 1, or exceeds the number of positive
        eigenvalues.
    """
    seed = _check_seed(seed)
    m = eigs.m
    if m is None or m < 1:
        raise InvalidTruncation("truncation level m must be set and at least 1")
    if m > eigs.n_positive:
        raise InvalidTruncation(
            f"m = {m} exceeds the number of positive eigenvalues ({eigs.n_positive})"
        )
    if R < 1:
        raise InvalidInput("R must be at least 1")
    for nm in norms:
        if nm not in NORMS:
            raise InvalidInput(f"unknown norm {nm!r}")

    lam = eigs.eigenvalues[:m]
    loadings = eigs.eigenfunctions[:, :m] * np.sqrt(lam)
    chunks = [range(a, min(a + _CHUNK, R)) for a in range(0, R, _CHUNK)]
    args = (lam, loadings, tuple(norms), z_resolution, seed)
    if n_jobs == 1 or len(chunks) == 1:
        parts = [_draw_chunk(*args, c) for c in chunks]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(_draw_chunk)(*args, c) for c in chunks)
    result = {}
    for nm in norms:
        draws = np.concatenate([p[nm] for p in parts])
        draws.setflags(write=False)
        result[nm] = LimitDraws(nm, draws, R, z_resolution, seed)
    return result


def draw_limit_distribution(
    eigs: EigenSystem,
    norm: Norm,
    R: int = DEFAULT_R,
    z_resolution: int = DEFAULT_Z_RESOLUTION,
    seed: int = 0,
    n_jobs: int = 1,
) -> LimitDraws:
    return draw_limit_distributions(eigs, (norm,), R, z_resolution, seed, n_jobs)[norm]


def _as_array(draws: LimitDraws | FloatArray) -> FloatArray:
    return draws.draws if isinstance(draws, LimitDraws) else np.asarray(draws, float)


def critical_value(draws: LimitDraws | FloatArray, rho: float) -> float:
    """Empirical ``(1 - rho)`` quantile: the ``ceil((1 - rho) R)``-th order statistic."""
    if not 0.0 < rho < 1.0:
        raise InvalidInput(f"rho must lie in (0, 1), got {rho}")
    d = np.sort(_as_array(draws))
    R = d.size
    # guard against (1 - rho) * R landing a hair above an integer
    k = math.ceil((1.0 - rho) * R - 1e-9)
    return float(d[min(max(k, 1), R) - 1])


def p_value(draws: LimitDraws | FloatArray, stat: float) -> float:
    d = _as_array(draws)
    return float((1 + np.count_nonzero(d >= stat)) / (d.size + 1))
