from __future__ import annotations

import numpy as np
import pytest

from fcpreg.core import PairedFunctionalSample, SampleGrid


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


def random_sample(rng: np.random.Generator, n: int, T: int, slope: float = 1.5):
    """Paired sample from a stable concurrent model with random curves."""
    grid = SampleGrid.uniform(T)
    x = rng.normal(size=(n, T)) * 2.0 + rng.normal(size=T)
    y = 0.5 + slope * x + rng.normal(size=(n, T))
    return PairedFunctionalSample(grid, x, y)


@pytest.fixture
def small_sample(rng):
    return random_sample(rng, 40, 11)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
