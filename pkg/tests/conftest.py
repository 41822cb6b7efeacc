import math

import pytest

from udw_momentum.kinematics import DetectorPair, ProcessParams

ACCEPTANCE_LINES = []


@pytest.fixture
def default_proc():
    return ProcessParams(m=1.0, M=4.0, P=3.0)


@pytest.fixture
def default_det():
    return DetectorPair(delta1=2.0, delta2=3.0, r=5.0, alpha=math.pi / 2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
