import math

import pytest
from hypothesis import settings

from slipscm import INSTANT, TABLE2

settings.register_profile("slipscm", deadline=None, max_examples=60)
settings.load_profile("slipscm")


@pytest.fixture
def P():
    """Default parameters with the instantaneous crank."""
    return TABLE2.with_(omega=INSTANT)


@pytest.fixture
def lossless(P):
    return P.with_(d_bar=0.0)


def deg(x):
    return math.radians(x)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
