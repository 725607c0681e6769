import numpy as np
import pytest

from schottky.bergman import BasisSpec, Discretization
from schottky.geometry import reference_config

# depth-12 value from the increment estimator; the depth-14 run agrees to ~1e-9
DELTA_REF = 0.32060423781513236


@pytest.fixture(scope="session")
def data():
    return reference_config()


@pytest.fixture(scope="session")
def disc16(data):
    return Discretization(data, BasisSpec(16, 128))


@pytest.fixture(scope="session")
def disc8(data):
    return Discretization(data, BasisSpec(8, 64))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one-line acceptance verdicts, printed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict():
    def record(num, ok, detail=""):
        line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[num] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
