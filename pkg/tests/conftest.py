import numpy as np
import pytest

from ballcurv.spectral import make_grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grids():
    cache = {}

    def get(n, M=256):
        if (n, M) not in cache:
            cache[(n, M)] = make_grid(n, M)
        return cache[(n, M)]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
