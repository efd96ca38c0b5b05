import math

import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq, minimize_scalar

from slipscm.roots import BracketError, bisect, golden_section


@given(c=st.floats(-0.9, 0.9))
def test_bisect_matches_brentq(c):
    f = lambda x: math.sin(x) - c
    assert bisect(f, -math.pi / 2, math.pi / 2, xtol=1e-13) == pytest.approx(brentq(f, -math.pi / 2, math.pi / 2, xtol=1e-14), abs=1e-12)


def test_bisect_ftol_and_bracket():
    x = bisect(lambda x: x * x - 2, 0, 2, ftol=1e-10)
    assert abs(x * x - 2) <= 1e-10
    with pytest.raises(BracketError):
        bisect(lambda x: x * x + 1, -1, 1)
    assert bisect(lambda x: x, 0.0, 1.0) == 0.0


@given(c=st.floats(-2, 2))
def test_golden_matches_scipy(c):
    f = lambda x: (x - c) ** 2 + 1
    x, fx = golden_section(f, -3, 3, xtol=1e-9)
    ref = minimize_scalar(f, bounds=(-3, 3), method="bounded", options={"xatol": 1e-10})
    assert x == pytest.approx(ref.x, abs=1e-6)
    assert fx == pytest.approx(1.0, abs=1e-12)


def test_golden_keeps_endpoints():
    x, fx = golden_section(lambda x: x, 0.0, 1.0)
    assert x == 0.0 and fx == 0.0
