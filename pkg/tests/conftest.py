import numpy as np
import pytest

from perron_lab import Rect

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_lines():
    return ACCEPTANCE_LINES


@pytest.fixture
def unit_square():
    return Rect((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
