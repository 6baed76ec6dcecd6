import numpy as np
import pytest

from deanflow.dynamics import assemble
from deanflow.linear_stability import critical_point
from deanflow.nonlinear_reduction import InteractionTensor


@pytest.fixture(scope="session")
def tensor_l2():
    return InteractionTensor.assemble(8, 8, 2.0)


@pytest.fixture(scope="session")
def system_l2(tensor_l2):
    cp = critical_point(2.0)
    return assemble(2.0, cp.lambda0, (8, 8), tensor=tensor_l2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
