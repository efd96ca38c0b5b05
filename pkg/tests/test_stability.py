import math

import numpy as np
import pytest

from slipscm.analytic import EXACT, apex_return_hat
from slipscm.core import ControlInput, MapUnevaluable
from slipscm.stability import (
    ANALYTIC,
    CONTINUUM,
    FOUND,
    NOT_FOUND,
    NUMERIC,
    StabilityRecord,
    eigen_apex,
    eigen_control,
    existence_boundaries,
    find_fixed_point,
    per_degree,
    read_stability_csv,
    return_map,
    stability_point,
    stability_sweep,
    write_stability_csv,
)

TH40 = math.radians(40)


@pytest.mark.parametrize("kind", [ANALYTIC, NUMERIC])
def test_conservative_continuum(lossless, kind):
    fp = find_fixed_point(0.0, return_map(kind, lossless))
    assert fp.status == CONTINUUM and fp.y is None


@pytest.mark.parametrize("kind", [ANALYTIC, NUMERIC])
def test_conservative_eigenvalue_is_one(lossless, kind):
    assert eigen_apex(0.0, 0.6, return_map(kind, lossless)) == pytest.approx(1.0, abs=1e-6)


def test_fixed_point_40deg(P):
    for fn in (return_map(NUMERIC, P), return_map(ANALYTIC, P, liftoff=EXACT)):
        fp = find_fixed_point(TH40, fn)
        assert fp.status == FOUND
        assert abs(fn(fp.y, TH40) - fp.y) < 1e-8
        assert fp.y == pytest.approx(0.467517, abs=1e-6)


def test_newton_map_has_no_fixed_point_at_40deg(P):
    # the one-step Newton map sits 5-16 % below the true map near the fixed point
    fp = find_fixed_point(TH40, return_map(ANALYTIC, P))
    assert fp.status == NOT_FOUND
    assert apex_return_hat(0.467517, ControlInput(TH40), P) < 0.467517


def test_unevaluable(P):
    with pytest.raises(MapUnevaluable):
        find_fixed_point(TH40, return_map(ANALYTIC, P), y_range=(0.3, 0.39))


def test_eigenvalues_agree_and_stable(P):
    fn = return_map(NUMERIC, P)
    fe = return_map(ANALYTIC, P, liftoff=EXACT)
    y = find_fixed_point(TH40, fn).y
    ln, le = eigen_apex(TH40, y, fn), eigen_apex(TH40, y, fe)
    assert ln < 1 and le < 1
    assert abs(ln - le) < 0.05
    assert ln == pytest.approx(0.611043, abs=1e-5)


def test_eigen_control_first_order(P):
    fn = return_map(NUMERIC, P)
    y = find_fixed_point(TH40, fn).y
    # steps large enough that the 1e-8 fixed-point residual divided by the
    # step stays below the truncation term
    a, b, c = (eigen_control(TH40, y, fn, d) for d in (4e-3, 2e-3, 1e-3))
    assert abs(a - b) == pytest.approx(2 * abs(b - c), rel=0.05)


def test_eigen_control_positive_lossless(lossless):
    # r(theta) is flat at theta = 0, so the injected energy grows like d^4 and a
    # 1e-4 step vanishes in rounding; a 1e-2 step resolves it
    for fn in (return_map(NUMERIC, lossless), return_map(ANALYTIC, lossless, liftoff=EXACT)):
        assert eigen_control(0.0, 0.6, fn, 1e-2) > 0
    # away from the flat point the default step resolves the injection
    th = math.radians(20)
    fn = return_map(ANALYTIC, lossless, liftoff=EXACT)
    assert fn(0.6, th + 1e-4) > fn(0.6, th)


def test_per_degree_scaling(P):
    r = stability_point(math.radians(35), NUMERIC, P)
    assert r.lambda_control_per_deg == r.lambda_control * math.pi / 180
    assert per_degree(1.0) == math.pi / 180


def test_singleton_sweep(P):
    (r,) = stability_sweep([TH40], NUMERIC, P)
    fn = return_map(NUMERIC, P)
    fp = find_fixed_point(TH40, fn)
    assert r.y_fixed == fp.y and r.residual == fp.residual
    assert r.lambda_apex_numeric == eigen_apex(TH40, fp.y, fn)
    assert r.lambda_apex_aas == eigen_apex(TH40, fp.y, return_map(ANALYTIC, P))
    assert r.lambda_control == eigen_control(TH40, fp.y, fn)


def test_sweep_monotone_and_boundary(P):
    grid = np.radians(np.arange(15, 45.01, 0.5))
    recs = stability_sweep(grid, ANALYTIC, P, liftoff=EXACT)
    found = [r for r in recs if r.exists]
    assert np.all(np.diff([r.y_fixed for r in found]) > 0)
    for r in found:
        fn = return_map(ANALYTIC, P, liftoff=EXACT)
        assert abs(fn(r.y_fixed, r.theta2) - r.y_fixed) < 1e-8
    (b,) = existence_boundaries(recs, P, liftoff=EXACT)
    fn = return_map(ANALYTIC, P, liftoff=EXACT)
    assert find_fixed_point(b - math.radians(0.1), fn).status == NOT_FOUND
    assert find_fixed_point(b + math.radians(0.1), fn).status == FOUND
    assert math.degrees(b) == pytest.approx(29.34, abs=0.1)


def test_csv_roundtrip(tmp_path, P):
    recs = stability_sweep(np.radians([20.0, 35.0, 40.0]), NUMERIC, P)
    write_stability_csv(recs, tmp_path / "s.csv")
    back = read_stability_csv(tmp_path / "s.csv")
    for a, b in zip(recs, back):
        for f in StabilityRecord.__dataclass_fields__:
            x, y = getattr(a, f), getattr(b, f)
            if isinstance(x, float) and math.isnan(x):
                assert math.isnan(y)
            else:
                assert x == y
