import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import ivp_stride
from slipscm.analytic import EXACT, build_coefficients, exact_liftoff_time, predict_stride, stance_position, stance_velocity
from slipscm.core import (
    EVENT_TOL,
    INSTANT,
    TABLE2,
    ApexState,
    ControlInput,
    HybridState,
    NoTouchdown,
    Phase,
    StanceStuck,
)
from slipscm.kinematics import leg_offset
from slipscm.simulator import (
    HARNESS,
    ORACLE,
    IntegratorConfig,
    Trace,
    apex_return,
    flight_ascend,
    flight_descend,
    simulate,
    stance_step,
    stride_trace,
)
from slipscm.stability import NUMERIC, find_fixed_point, return_map

U30 = ControlInput.from_degrees(30)


def test_flight_descend_examples():
    td = flight_descend(ApexState(0.8), TABLE2)
    assert td.ydot == pytest.approx(-2.801428, abs=5e-7)
    assert td.y == pytest.approx(0.4, abs=1e-15)
    assert td.t == pytest.approx(math.sqrt(0.8 / 9.81), rel=1e-15)
    zero = flight_descend(ApexState(0.4), TABLE2)
    assert zero.t == 0.0 and zero.ydot == 0.0
    with pytest.raises(NoTouchdown):
        flight_descend(ApexState(0.3999), TABLE2)


def test_flight_ascend_examples():
    lo = HybridState(0.0, 0.38, 2.0, 0.3, Phase.ASCENT)
    # 0.38 + 4/19.62 = 0.5838736; the quoted 0.583873 is truncated
    assert flight_ascend(lo, TABLE2).y_a == pytest.approx(0.583873, abs=1e-6)
    assert flight_ascend(lo, TABLE2).y_a == pytest.approx(0.38 + 4 / 19.62, rel=1e-15)
    assert flight_ascend(HybridState(0.0, 0.38, 0.0, 0.3, Phase.ASCENT), TABLE2).y_a == 0.38
    up = HybridState(0.0, 0.4, math.sqrt(2 * 9.81 * 0.4), 0.0, Phase.ASCENT)
    assert flight_ascend(up, TABLE2).y_a == pytest.approx(0.8, rel=1e-15)
    assert flight_ascend(HybridState(0.0, 0.4, 2.801428, 0.0, Phase.ASCENT), TABLE2).y_a == pytest.approx(0.8, abs=1e-6)
    with pytest.raises(ValueError):
        flight_ascend(HybridState(0.0, 0.4, -1.0, 0.0, Phase.ASCENT), TABLE2)


def test_liftoff_matches_closed_form(P):
    td = flight_descend(ApexState(0.6), P)
    st = stance_step(td, U30, P, ORACLE, record=False)
    c = build_coefficients(td.y, td.ydot, U30, P)
    t_lo = exact_liftoff_time(c, P)
    assert abs(st.state_lo.y - stance_position(t_lo, c)) < 10 * EVENT_TOL
    assert abs(st.state_lo.ydot - stance_velocity(t_lo, c)) < 10 * EVENT_TOL


def test_lossless_symmetric_liftoff(lossless):
    td = flight_descend(ApexState(0.7), lossless)
    st = stance_step(td, ControlInput(0.0), lossless, ORACLE, record=False)
    assert st.state_lo.ydot == pytest.approx(-td.ydot, rel=1e-6)


def test_bottom_residual_finite_omega():
    td = flight_descend(ApexState(0.8), TABLE2)
    st = stance_step(td, ControlInput.from_degrees(15), TABLE2, HARNESS, record=False)
    assert abs(st.state_b.ydot) < EVENT_TOL
    # event residuals at every event
    assert abs(td.y - (TABLE2.l0 + leg_offset(TABLE2.theta1, TABLE2))) < EVENT_TOL
    lo = st.state_lo
    h = TABLE2.k * (lo.y - TABLE2.l0 - leg_offset(lo.theta, TABLE2)) + TABLE2.d_bar * lo.ydot
    assert abs(h) < TABLE2.k * EVENT_TOL and lo.ydot > 0


@pytest.mark.parametrize("y_a", np.linspace(0.42, 0.8, 5))
def test_conservative_identity(lossless, y_a):
    nxt, _ = apex_return(ApexState(y_a), ControlInput(0.0), lossless)
    assert nxt.y_a == pytest.approx(y_a, rel=1e-5)


def test_damping_dissipates():
    for p in (TABLE2, TABLE2.with_(omega=INSTANT)):
        nxt, _ = apex_return(ApexState(0.6), ControlInput(0.0), p)
        assert nxt.y_a < 0.6


def test_numeric_fixed_point_residual(P):
    th = math.radians(40)
    fn = return_map(NUMERIC, P)
    fp = find_fixed_point(th, fn)
    assert abs(apex_return(ApexState(fp.y), ControlInput(th), P)[0].y_a - fp.y) < 1e-4


@pytest.mark.parametrize(
    "omega, theta2_deg, y_a",
    [(INSTANT, 30, 0.6), (20.0, 30, 0.6), (20.0, 15, 0.8), (5.0, 45, 0.7), (8.0, 40, 0.75)],
)
def test_against_scipy_oracle(omega, theta2_deg, y_a):
    p = TABLE2.with_(omega=omega)
    th = math.radians(theta2_deg)
    ref = ivp_stride(y_a, th, p)
    nxt, rec = apex_return(ApexState(y_a), ControlInput(th), p, ORACLE)
    assert rec.saturated == ref["saturated"]
    assert rec.t_b == pytest.approx(ref["t_b"], abs=1e-8)
    assert rec.t_lo == pytest.approx(ref["t_lo"], abs=1e-8)
    assert nxt.y_a == pytest.approx(ref["y_next"], abs=1e-9)


def test_no_liftoff_agrees_with_scipy():
    # slow crank: the ramp keeps absorbing energy and the load never recovers
    p = TABLE2.with_(omega=8.0)
    th = math.radians(40)
    assert ivp_stride(0.5, th, p)["t_lo"] is None
    with pytest.raises(StanceStuck):
        apex_return(ApexState(0.5), ControlInput(th), p, ORACLE)


def test_stance_trace_against_scipy():
    p = TABLE2.with_(omega=12.0)
    th = math.radians(35)
    ref = ivp_stride(0.65, th, p)
    tr, rec = stride_trace(ApexState(0.65), ControlInput(th), p, IntegratorConfig(dt=1e-5, sample_stride=50))
    dec = [s for s in tr if s.phase is Phase.DECOMPRESSION]
    for s in dec[:: max(len(dec) // 20, 1)]:
        y, v = ref["dense"].sol(s.t - rec.t_td)
        assert s.y == pytest.approx(y, abs=1e-9)
        assert s.ydot == pytest.approx(v, abs=1e-8)


def test_rk4_fourth_order(P):
    ref = predict_stride(0.6, U30, P, EXACT).y_a_next
    errs = [abs(apex_return(ApexState(0.6), U30, P, IntegratorConfig(dt=dt))[0].y_a - ref) for dt in (2e-3, 1e-3, 5e-4)]
    for a, b in zip(errs, errs[1:]):
        assert 8 <= a / b <= 32


def _energy(trace, p, r):
    y, v = trace.column("y"), trace.column("ydot")
    return 0.5 * p.m * v * v + p.m * p.g * y + 0.5 * p.k * np.minimum(y - p.l0 - r, 0) ** 2 * 0 + 0.5 * p.k * (y - p.l0 - r) ** 2


def test_flight_energy_exact(P):
    tr, _ = stride_trace(ApexState(0.7), U30, P, IntegratorConfig(dt=1e-4, sample_stride=10))
    for phase in (Phase.DESCENT, Phase.ASCENT):
        s = [x for x in tr.states[:-1] if x.phase is phase]  # last sample is the next apex
        e = np.array([0.5 * P.m * x.ydot**2 + P.m * P.g * x.y for x in s])
        assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-14


def test_lossless_stance_energy(lossless):
    for th in (0.0, math.radians(30)):
        tr, _ = stride_trace(ApexState(0.7), ControlInput(th), lossless, IntegratorConfig(dt=1e-5, sample_stride=10))
        s = Trace([x for x in tr if x.phase in (Phase.COMPRESSION, Phase.DECOMPRESSION)][1:])
        e = _energy(s, lossless, leg_offset(th, lossless))
        assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-6


def test_trace_shape_and_determinism(P):
    a, ra = stride_trace(ApexState(0.6), U30, P)
    b, rb = stride_trace(ApexState(0.6), U30, P)
    assert a.states == b.states and ra == rb
    assert a.states[0].ydot == 0.0 and a.states[-1].ydot == 0.0
    assert a.states[-1].y == ra.y_a_next
    t = a.column("t")
    assert np.all(np.diff(t) > 0)
    phases = [s.phase for s in a]
    order = [Phase.DESCENT, Phase.COMPRESSION, Phase.DECOMPRESSION, Phase.ASCENT]
    seen = [order.index(x) for x in phases[:-1]]
    assert seen == sorted(seen)


def test_trace_csv_roundtrip(tmp_path, P):
    tr, _ = stride_trace(ApexState(0.6), U30, P, IntegratorConfig(dt=1e-4, sample_stride=7))
    tr.to_csv(tmp_path / "t.csv")
    assert Trace.from_csv(tmp_path / "t.csv").states == tr.states


def test_simulate_chains(P):
    us = [ControlInput.from_degrees(d) for d in (35, 40, 45)]
    tr, recs = simulate(ApexState(0.5), us, P)
    assert len(recs) == 3
    y = 0.5
    for u, r in zip(us, recs):
        nxt, _ = apex_return(ApexState(y), u, P)
        assert r.y_a_next == nxt.y_a
        y = nxt.y_a
    assert tr.states[-1].t == pytest.approx(sum(r.t_apex for r in recs), rel=1e-12)
    assert np.all(np.diff(tr.column("t")) > 0)


def test_stance_stuck():
    with pytest.raises(StanceStuck):
        apex_return(ApexState(0.6), U30, TABLE2, IntegratorConfig(max_stance_time=0.01))


@settings(max_examples=25)
@given(y=st.floats(0.41, 0.8), th=st.floats(math.radians(15), math.radians(45)))
def test_instant_map_close_to_exact_analytic(y, th):
    # with the crank jumping at touchdown the stance ODE is the analytic oscillator
    p = TABLE2.with_(omega=INSTANT)
    nxt, _ = apex_return(ApexState(y), ControlInput(th), p)
    assert nxt.y_a == pytest.approx(predict_stride(y, ControlInput(th), p, EXACT).y_a_next, abs=1e-9)
