import numpy as np
import pytest

from autosc.core import generate_synthetic

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def three_planes():
    """Noise-free 3 x 20 samples from independent 4-D subspaces of R^30."""
    return generate_synthetic(3, 4, 20, 30, 0.0, seed=11)


@pytest.fixture(scope="session")
def three_planes_noisy():
    return generate_synthetic(3, 4, 20, 30, 0.01, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
