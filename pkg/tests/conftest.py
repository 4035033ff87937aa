import numpy as np
import pytest
from hypothesis import settings

# solver calls have uneven first-call cost (numba compile, gmpy2 setup)
settings.register_profile("cycleglauber", deadline=None)
settings.load_profile("cycleglauber")

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
