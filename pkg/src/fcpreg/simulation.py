"""Synthetic designs for size/power studies of the slope-change test.

Regressors are a Gaussian bump mean plus low-frequency Fourier terms with
IID or AR(1) coefficients, errors are high-frequency Fourier terms with IID
standard normal coefficients. A single slope change happens at
``k* = floor(change_fraction * n)``; curves ``i >= k*`` (1-based) use the
post-change slope.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.signal import lfilter

from fcpreg.core import FloatArray, PairedFunctionalSample, SampleGrid
from fcpreg.detector import TestConfig, run_test
from fcpreg.errors import FcpError, InvalidInput

DESIGNS = ("iid", "ar1")
SPIKE_WIDTH = 0.02
SPIKE_HEIGHT = 0.5


# -- functional building blocks ------------------------------------------------


def _fourier(D: int, t: FloatArray, base: float) -> FloatArray:
    if D < 1:
        raise InvalidInput("D must be at least 1")
    t = np.asarray(t, dtype=np.float64)
    out = np.empty((D, t.size))
    for ell in range(1, D + 1):
        k = (ell + 1) // 2
        arg = base * k * np.pi * t
        out[ell - 1] = np.sin(arg) if ell % 2 else np.cos(arg)
    return out


def regressor_basis(D: int, t: FloatArray) -> FloatArray:
    """Rows ``sin(2 pi t), cos(2 pi t), sin(4 pi t), ...``; shape ``(D, len(t))``."""
    return _fourier(D, t, 2.0)


def error_basis(D: int, t: FloatArray) -> FloatArray:
    """Rows ``sin(12 pi t), cos(12 pi t), sin(24 pi t), ...``."""
    return _fourier(D, t, 12.0)


def mean_function(t):
    return 9.0 * np.exp(-100.0 * (np.asarray(t, dtype=np.float64) - 0.5) ** 2)


def slope_null(t):
    t = np.asarray(t, dtype=np.float64)
    return t**2 * (3.0 - 2.0 * t**3)


def intercept_null(t):
    t = np.asarray(t, dtype=np.float64)
    return (1.0 - t) ** 2 + (3.0 - 2.0 * (1.0 - t))


def spike(t):
    t = np.asarray(t, dtype=np.float64)
    return SPIKE_HEIGHT * np.exp(-0.5 * ((t - 0.5) / SPIKE_WIDTH) ** 2)


# -- configuration --------------------------------------------------------------


@dataclass(frozen=True)
class Alternative:
    """``kind`` is ``"none"``, ``"scaled"`` (post-change slope ``delta * gamma_0``)
    or ``"spiked"`` (``gamma_0 + spike``)."""

    kind: str = "none"
    delta: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("none", "scaled", "spiked"):
            raise InvalidInput(f"unknown alternative {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> Alternative:
        """Parse ``none``, ``spiked``, ``scaled`` or ``scaled:<delta>``."""
        kind, _, arg = text.strip().partition(":")
        kind = {"spike": "spiked", "null": "none"}.get(kind, kind)
        if kind == "scaled":
            return cls("scaled", float(arg) if arg else 0.5)
        if arg:
            raise InvalidInput(f"alternative {kind!r} takes no parameter")
        return cls(kind)

    @property
    def label(self) -> str:
        return f"scaled:{self.delta:g}" if self.kind == "scaled" else self.kind

    def post_change_slope(self, t: FloatArray) -> FloatArray:
        g0 = slope_null(t)
        if self.kind == "scaled":
            return self.delta * g0
        if self.kind == "spiked":
            return g0 + spike(t)
        return g0


@dataclass(frozen=True)
class DgpConfig:
    n: int = 300
    T: int = 101
    design: str = "iid"
    alternative: Alternative = Alternative()
    change_fraction: float = 0.5
    D: int = 12
    ar_coef: float = 0.8
    sigma: float = 4.0
    iid_variance: float = 4.0
    burn_in: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.alternative, str):
            object.__setattr__(self, "alternative", Alternative.parse(self.alternative))
        if self.n < 10:
            raise InvalidInput("n must be at least 10")
        if self.T < 21:
            raise InvalidInput("T must be at least 21")
        if self.D < 1:
            raise InvalidInput("D must be at least 1")
        if self.design not in DESIGNS:
            raise InvalidInput(f"design must be one of {DESIGNS}, got {self.design!r}")
        if not 0.0 < self.change_fraction < 1.0:
            raise InvalidInput("change_fraction must lie in (0, 1)")
        if not abs(self.ar_coef) < 1.0:
            raise InvalidInput("|ar_coef| must be below 1")
        if self.burn_in < 0 or self.sigma <= 0 or self.iid_variance <= 0:
            raise InvalidInput("burn_in must be >= 0 and variances positive")

    @property
    def change_index(self) -> int:
        return math.floor(self.change_fraction * self.n)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["alternative"] = self.alternative.label
        return d


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    sample: PairedFunctionalSample
    change_index: int | None
    errors: FloatArray
    config: DgpConfig


# -- generators -----------------------------------------------------------------


def ar_coefficients(
    n: int,
    D: int,
    rng: np.random.Generator,
    ar_coef: float = 0.8,
    sigma: float = 4.0,
    burn_in: int = 200,
) -> FloatArray:
    """``F_{i,l} = a F_{i-1,l} + (sigma / l) xi_{i,l}`` started at zero; the first
    ``burn_in`` rows are discarded."""
    sd = sigma / np.arange(1, D + 1)
    innov = rng.standard_normal((burn_in + n, D)) * sd
    path = lfilter([1.0], [1.0, -ar_coef], innov, axis=0)
    return path[burn_in:]


def generate_dataset(config: DgpConfig) -> SimulatedDataset:
    grid = SampleGrid.uniform(config.T)
    t = grid.points
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    n, D = config.n, config.D

    if config.design == "iid":
        coef = rng.normal(0.0, math.sqrt(config.iid_variance), size=(n, D))
    else:
        coef = ar_coefficients(n, D, rng, config.ar_coef, config.sigma, config.burn_in)
    x = mean_function(t) + coef @ regressor_basis(D, t)
    eps = rng.standard_normal((n, D)) @ error_basis(D, t)

    gamma = np.broadcast_to(slope_null(t), (n, config.T)).copy()
    alt = config.alternative
    k_star = None
    if alt.kind != "none":
        k_star = config.change_index
        # 1-based curves i >= k* switch, i.e. rows k* - 1 onwards
        gamma[max(k_star - 1, 0) :] = alt.post_change_slope(t)
    y = intercept_null(t) + gamma * x + eps
    return SimulatedDataset(PairedFunctionalSample(grid, x, y), k_star, eps, config)


# -- study harness --------------------------------------------------------------


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit seed from a tuple of nonnegative integers."""
    state = np.random.SeedSequence(list(parts)).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


@dataclass(frozen=True)
class ReplicationOutcome:
    reject_sup: bool
    reject_l2: bool
    stat_sup: float
    stat_l2: float
    k_sup: int
    k_l2: int
    p_sup: float
    p_l2: float
    m_used: int


@dataclass(frozen=True)
class StudyCell:
    n: int
    design: str
    alternative: str
    rejection_rate_sup: float
    rejection_rate_l2: float
    replications: int
    seed: int

    def table_rows(self) -> list[dict]:
        """Long-format rows: one per norm."""
        base = {"n": self.n, "setting": self.alternative, "design": self.design}
        return [
            {**base, "norm": "L2", "rate": self.rejection_rate_l2},
            {**base, "norm": "sup", "rate": self.rejection_rate_sup},
        ]


class StudyError(FcpError):
    stage = "study"


def run_replication(dgp: DgpConfig, test: TestConfig) -> ReplicationOutcome:
    data = generate_dataset(dgp)
    report = run_test(data.sample, dataclasses.replace(test, norm="both", n_jobs=1))
    sup, l2 = report["sup"], report["l2"]
    return ReplicationOutcome(
        reject_sup=sup.reject,
        reject_l2=l2.reject,
        stat_sup=sup.statistic,
        stat_l2=l2.statistic,
        k_sup=sup.change_index,
        k_l2=l2.change_index,
        p_sup=sup.p_value,
        p_l2=l2.p_value,
        m_used=sup.m_used,
    )


def _guarded(cell: int, r: int, dgp: DgpConfig, test: TestConfig) -> ReplicationOutcome:
    try:
        return run_replication(dgp, test)
    except FcpError as exc:
        raise StudyError(f"cell {cell}, replication {r}: {exc}") from exc


def simulate_replications(
    dgp: DgpConfig,
    test: TestConfig,
    replications: int,
    seed: int,
    n_jobs: int = 1,
    cell: int = 0,
) -> list[ReplicationOutcome]:
    """Run ``replications`` independent datasets through the test.

    Replication ``r`` uses dataset seed ``derive_seed(seed, r, 0)`` and Monte
    Carlo seed ``derive_seed(seed, r, 1)``.
    """
    if replications < 1:
        raise InvalidInput("replications must be at least 1")
    jobs = [
        (
            cell,
            r,
            dataclasses.replace(dgp, seed=derive_seed(seed, r, 0)),
            dataclasses.replace(test, seed=derive_seed(seed, r, 1)),
        )
        for r in range(replications)
    ]
    if n_jobs == 1:
        return [_guarded(*job) for job in jobs]
    return list(Parallel(n_jobs=n_jobs)(delayed(_guarded)(*job) for job in jobs))


def run_study(
    cells: Sequence[tuple[DgpConfig, TestConfig]],
    replications: int,
    master_seed: int = 0,
    n_jobs: int = 1,
    on_cell: Callable[[int, StudyCell], None] | None = None,
) -> list[StudyCell]:
    """Rejection rates for every ``(dgp, test)`` cell.

    Cell ``c`` is seeded with ``derive_seed(master_seed, c)``. ``on_cell`` is
    called as soon as each cell finishes, which lets callers flush partial
    results.
    """
    out = []
    for c, (dgp, test) in enumerate(cells):
        cell_seed = derive_seed(master_seed, c)
        reps = simulate_replications(dgp, test, replications, cell_seed, n_jobs, cell=c)
        result = StudyCell(
            n=dgp.n,
            design=dgp.design,
            alternative=dgp.alternative.label,
            rejection_rate_sup=float(np.mean([o.reject_sup for o in reps])),
            rejection_rate_l2=float(np.mean([o.reject_l2 for o in reps])),
            replications=replications,
            seed=cell_seed,
        )
        out.append(result)
        if on_cell is not None:
            on_cell(c, result)
    return out


PRESETS = {
    "table1-desk": {"n": (100, 300), "replications": 300},
    "table1-full": {"n": (100, 300, 500, 1000), "replications": 1000},
}
TABLE1_SETTINGS = ("none", "scaled:0.5", "spiked")


def study_grid(
    ns: Iterable[int],
    designs: Iterable[str] = DESIGNS,
    alternatives: Iterable[str] = TABLE1_SETTINGS,
    T: int = 101,
    test: TestConfig | None = None,
) -> list[tuple[DgpConfig, TestConfig]]:
    """Cells ordered like the rows of the published table: n, then setting,
    then design. Monte Carlo size defaults to ``R = 100``."""
    test = test or TestConfig(R=100)
    designs = tuple(designs)
    return [
        (DgpConfig(n=n, T=T, design=d, alternative=Alternative.parse(a)), test)
        for n in ns
        for a in alternatives
        for d in designs
    ]
