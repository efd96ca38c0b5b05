import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slipscm.analytic import EXACT
from slipscm.core import INSTANT, TABLE2, CellFailed
from slipscm.harness import (
    CALIBRATED_OMEGA,
    GridSpec,
    calibrate_omega,
    paired_events,
    pct_error,
    prediction_errors,
    read_paired_csv,
    run_grid,
    saturation_margin,
    single_stride_trace,
    write_paired_csv,
)
from slipscm.simulator import IntegratorConfig

TH30 = math.radians(30)


def test_identical_models_agree():
    spec = GridSpec(omega=INSTANT, liftoff=EXACT)
    for y, th in ((0.6, TH30), (0.8, math.radians(15)), (0.45, math.radians(45))):
        c = prediction_errors(y, th, TABLE2, spec)
        assert c.E_ap < 1e-3 and c.E_lv < 1e-3


def test_newton_cell_errors():
    c = prediction_errors(0.6, TH30, TABLE2, GridSpec(omega=INSTANT))
    assert c.E_ap == pytest.approx(0.0346592, abs=1e-6)
    assert c.E_lv == pytest.approx(0.595790, abs=1e-5)
    assert c.y_next == pytest.approx(0.5260578787, abs=1e-9)


def test_finite_omega_larger_errors():
    th = math.radians(20)
    inst = prediction_errors(0.8, th, TABLE2, GridSpec(omega=INSTANT))
    ramp = prediction_errors(0.8, th, TABLE2, GridSpec(omega=20.0))
    assert ramp.E_ap > inst.E_ap and ramp.E_lv > inst.E_lv


def test_cell_failed_wraps():
    with pytest.raises(CellFailed) as ei:
        prediction_errors(0.4, math.radians(45), TABLE2, GridSpec(omega=INSTANT))
    assert "NoLiftoff" in type(ei.value.cause).__name__


@given(truth=st.floats(0.1, 10), diff=st.floats(1e-6, 0.05))
def test_metric_scales_linearly(truth, diff):
    assert pct_error(truth, truth + 2 * diff) == pytest.approx(2 * pct_error(truth, truth + diff), rel=1e-9)
    assert pct_error(truth, truth - diff) == pytest.approx(pct_error(truth, truth + diff), rel=1e-9)


SMALL = GridSpec(ya_count=2, theta2_count=2, omega=INSTANT)


def test_grid_composition():
    g = run_grid(SMALL, TABLE2)
    for i, y in enumerate(SMALL.ya):
        for j, th in enumerate(SMALL.theta2):
            try:
                c = prediction_errors(float(y), float(th), TABLE2, SMALL)
            except CellFailed:
                assert g.failed[i, j]
                continue
            assert (g.E_ap[i, j], g.E_lv[i, j], g.saturated[i, j]) == (c.E_ap, c.E_lv, c.saturated)


def test_grid_deterministic_and_projection():
    spec = GridSpec(ya_count=6, theta2_count=5, omega=CALIBRATED_OMEGA)
    a, b = run_grid(spec, TABLE2), run_grid(spec, TABLE2)
    for f in ("E_ap", "E_lv", "saturated", "failed"):
        assert np.array_equal(getattr(a, f), getattr(b, f), equal_nan=f.startswith("E"))
    proj = a.projection()
    for j in range(5):
        ok = ~a.failed[:, j]
        if ok.any():
            assert proj[j, 1] == a.E_ap[ok, j].mean()
            assert proj[j, 4] == a.E_lv[ok, j].std()
    ok = ~a.failed
    assert a.E_ap_stats == (a.E_ap[ok].mean(), a.E_ap[ok].std(ddof=0))


def test_grid_counts_validated():
    with pytest.raises(ValueError):
        GridSpec(ya_count=1)


def test_theta_sat():
    assert run_grid(SMALL, TABLE2).theta_sat is None
    spec = GridSpec(ya_count=5, theta2_count=31, omega=CALIBRATED_OMEGA)
    g = run_grid(spec, TABLE2)
    assert math.degrees(g.theta_sat) == pytest.approx(33.0, abs=1e-9)  # first 1-deg column past 32.27
    j = list(g.theta2).index(g.theta_sat)
    assert g.saturated[:, :j][~g.failed[:, :j]].all()


def test_grid_csv(tmp_path):
    g = run_grid(SMALL, TABLE2)
    g.write_csv(tmp_path / "g.csv")
    g.write_projection_csv(tmp_path / "p.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "y_a,theta2_deg,E_ap_pct,E_lv_pct,saturated,failed"
    assert len(lines) == 5
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "theta2_deg,mean_E_ap,std_E_ap,mean_E_lv,std_E_lv"


def test_paired_trace(tmp_path):
    p = TABLE2.with_(omega=INSTANT)
    pair = single_stride_trace(0.6, TH30, p)
    ev = dict((n, (a, b)) for n, a, b in paired_events(pair))
    assert abs(ev["bottom"][0] - ev["bottom"][1]) < 1e-6
    assert ev["touchdown"][0] == ev["touchdown"][1]
    for tr in (pair.numeric, pair.analytic):
        assert tr.states[0].ydot == 0.0 and tr.states[-1].ydot == 0.0
    write_paired_csv(pair, tmp_path / "p.csv")
    num, ana = read_paired_csv(tmp_path / "p.csv")
    assert num.states == pair.numeric.states
    assert ana.states == pair.analytic.states


def test_calibrated_omega_reproduces():
    w = calibrate_omega(TABLE2)
    assert w == pytest.approx(CALIBRATED_OMEGA, abs=1e-5)
    ya = np.linspace(0.4, 0.8, 100)
    assert abs(saturation_margin(math.radians(32), w, TABLE2, ya)) < 1e-5
    # faster crank saturates everything at the boundary, slower misses somewhere
    assert saturation_margin(math.radians(32), w * 1.01, TABLE2, ya) > 0
    assert saturation_margin(math.radians(32), w * 0.99, TABLE2, ya) < 0
