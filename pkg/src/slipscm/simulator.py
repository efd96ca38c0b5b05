"""Ground-truth integration of the hybrid hopper dynamics.

Flight phases are propagated in closed form. Stance is integrated with
fixed-step classical RK4; the crank-saturation instant is hit exactly by
shortening the step, while the bottom (velocity zero crossing) and liftoff
(leg load zero crossing) events are refined by bisecting the length of a single
RK4 sub-step taken from the start of the step that bracketed them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .core import (
    EVENT_TOL,
    ApexState,
    ControlInput,
    HybridState,
    ModelParams,
    NoTouchdown,
    Phase,
    StanceStuck,
    StepUnstable,
    StrideRecord,
    check_control,
    validate,
)
from .kinematics import leg_offset


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-4
    event_tol: float = EVENT_TOL
    max_stance_time: float = 2.0
    sample_stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and self.event_tol > 0 and self.max_stance_time > 0):
            raise ValueError("dt, event_tol and max_stance_time must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


HARNESS = IntegratorConfig(dt=1e-4)
ORACLE = IntegratorConfig(dt=1e-5)


# --------------------------------------------------------------------------
# stance kernel

_OK, _STUCK, _UNSTABLE = 0, 1, 2
_PH_COMP, _PH_DECOMP, _PH_ASCENT = 1, 2, 3


@njit(cache=True)
def _theta(t, cap, theta1, omega, instant):
    if instant:
        return cap
    th = theta1 + omega * t
    return th if th < cap else cap


@njit(cache=True)
def _offset(th, l1, l2):
    return l1 * math.cos(th) + l2 * math.cos(math.asin(l1 / l2 * math.sin(th)))


@njit(cache=True)
def _accel(t, y, v, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant):
    r = _offset(_theta(t, cap, theta1, omega, instant), l1, l2)
    return -g - (k / m) * (y - l0 - r) - (d / m) * v


@njit(cache=True)
def _rk4(t, y, v, h, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant):
    a1 = _accel(t, y, v, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
    y2 = y + 0.5 * h * v
    v2 = v + 0.5 * h * a1
    a2 = _accel(t + 0.5 * h, y2, v2, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
    y3 = y + 0.5 * h * v2
    v3 = v + 0.5 * h * a2
    a3 = _accel(t + 0.5 * h, y3, v3, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
    y4 = y + h * v3
    v4 = v + h * a3
    a4 = _accel(t + h, y4, v4, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
    return (
        y + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
        v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
    )


@njit(cache=True)
def _load(t, y, v, cap, k, d, l0, l1, l2, theta1, omega, instant):
    return k * (y - l0 - _offset(_theta(t, cap, theta1, omega, instant), l1, l2)) + d * v


@njit(cache=True)
def _stance_kernel(
    y0, v0, m, k, d, l0, l1, l2, g, theta1, theta2, omega, instant,
    dt, tol, t_max, stride, record, stop_at_bottom,
):
    t_sat = 0.0 if instant else (theta2 - theta1) / omega
    saturated = instant or t_sat <= 0.0
    t_star = 0.0 if saturated else -1.0
    cap = theta2
    bottom = False
    t, y, v = 0.0, y0, v0
    t_b = y_b = v_b = th_b = 0.0
    nbuf = int(t_max / dt / stride) + 16 if record else 1
    buf = np.empty((nbuf, 4))
    ph = np.empty(nbuf, np.int64)
    n = 0
    if record:
        buf[0, 0], buf[0, 1], buf[0, 2] = t, y, v
        buf[0, 3] = _theta(t, cap, theta1, omega, instant)
        ph[0] = _PH_COMP
        n = 1
    step = 0
    htol = k * tol
    while True:
        if t > t_max:
            return _STUCK, t_b, y_b, v_b, th_b, t, y, v, 0.0, saturated, t_star, buf[:n], ph[:n]
        h = dt
        hit_sat = False
        if not saturated and not bottom and t + h >= t_sat:
            h = t_sat - t
            hit_sat = True
        y1, v1 = _rk4(t, y, v, h, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
        if not (math.isfinite(y1) and math.isfinite(v1)):
            return _UNSTABLE, t_b, y_b, v_b, th_b, t, y, v, 0.0, saturated, t_star, buf[:n], ph[:n]

        if not bottom and v < 0.0 and v1 >= 0.0:
            lo, hi = 0.0, h
            tau = h
            vt = v1
            if abs(v1) > tol:
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        break
                    ym, vm = _rk4(t, y, v, mid, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
                    if abs(vm) <= tol:
                        tau, vt = mid, vm
                        break
                    if vm < 0.0:
                        lo = mid
                    else:
                        hi = mid
                        tau, vt = mid, vm
            y1, v1 = _rk4(t, y, v, tau, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
            t = t + tau
            y, v = y1, v1
            if hit_sat and tau == h:
                saturated = True
                t_star = t_sat
                t = t_sat
            if not saturated:
                cap = theta1 + omega * t
            bottom = True
            t_b, y_b, v_b = t, y, v
            th_b = _theta(t, cap, theta1, omega, instant)
            if record:
                buf[n, 0], buf[n, 1], buf[n, 2], buf[n, 3] = t, y, v, th_b
                ph[n] = _PH_DECOMP
                n += 1
            step = 0
            if stop_at_bottom:
                return _OK, t_b, y_b, v_b, th_b, t, y, v, th_b, saturated, t_star, buf[:n], ph[:n]
            continue

        if bottom:
            h0 = _load(t, y, v, cap, k, d, l0, l1, l2, theta1, omega, instant)
            h1 = _load(t + h, y1, v1, cap, k, d, l0, l1, l2, theta1, omega, instant)
            if h0 < 0.0 and h1 >= 0.0 and v1 > 0.0:
                lo, hi = 0.0, h
                tau = h
                if abs(h1) > htol:
                    for _ in range(200):
                        mid = 0.5 * (lo + hi)
                        if mid <= lo or mid >= hi:
                            break
                        ym, vm = _rk4(t, y, v, mid, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
                        hm = _load(t + mid, ym, vm, cap, k, d, l0, l1, l2, theta1, omega, instant)
                        if abs(hm) <= htol:
                            tau = mid
                            break
                        if hm < 0.0:
                            lo = mid
                        else:
                            hi = mid
                            tau = mid
                y1, v1 = _rk4(t, y, v, tau, cap, m, k, d, l0, l1, l2, g, theta1, omega, instant)
                t = t + tau
                th = _theta(t, cap, theta1, omega, instant)
                if record:
                    buf[n, 0], buf[n, 1], buf[n, 2], buf[n, 3] = t, y1, v1, th
                    ph[n] = _PH_ASCENT
                    n += 1
                return _OK, t_b, y_b, v_b, th_b, t, y1, v1, th, saturated, t_star, buf[:n], ph[:n]

        if hit_sat:
            t = t_sat
            saturated = True
            t_star = t_sat
        else:
            t = t + h
        y, v = y1, v1
        step += 1
        if record and (step % stride == 0 or hit_sat) and n < nbuf - 2:
            buf[n, 0], buf[n, 1], buf[n, 2] = t, y, v
            buf[n, 3] = _theta(t, cap, theta1, omega, instant)
            ph[n] = _PH_DECOMP if bottom else _PH_COMP
            n += 1


_PHASE_OF = {_PH_COMP: Phase.COMPRESSION, _PH_DECOMP: Phase.DECOMPRESSION, _PH_ASCENT: Phase.ASCENT}


# --------------------------------------------------------------------------
# public API


@dataclass
class Trace:
    """Ordered :class:`HybridState` samples."""

    states: List[HybridState] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states], dtype=float)

    def to_csv(self, path) -> None:
        write_trace_csv(self, path)

    @classmethod
    def from_csv(cls, path) -> "Trace":
        return read_trace_csv(path)


TRACE_COLUMNS = ("t", "y", "ydot", "theta", "phase")


def write_trace_csv(trace: Trace, path, extra: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for s in trace.states:
            w.writerow((repr(float(s.t)), repr(float(s.y)), repr(float(s.ydot)), repr(float(s.theta)), s.phase.value))


def read_trace_csv(path) -> Trace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Trace(
        [
            HybridState(float(r["t"]), float(r["y"]), float(r["ydot"]), float(r["theta"]), Phase(r["phase"]))
            for r in rows
        ]
    )


@dataclass(frozen=True)
class StanceResult:
    trace: Trace
    state_b: HybridState
    state_lo: HybridState
    t_b: float
    t_lo: float
    saturated: bool
    t_star: Optional[float]


def touchdown_height(params: ModelParams) -> float:
    return params.l0 + leg_offset(params.theta1, params)


def flight_descend(apex: ApexState, params: ModelParams) -> HybridState:
    """Ballistic fall from apex to touchdown (crank locked at ``theta1``)."""
    y_td = touchdown_height(params)
    drop = apex.y_a - y_td
    if drop < 0:
        raise NoTouchdown(f"apex {apex.y_a!r} m is below touchdown height {y_td!r} m")
    t_td = math.sqrt(2.0 * drop / params.g)
    return HybridState(t_td, y_td, -math.sqrt(2.0 * params.g * drop), params.theta1, Phase.COMPRESSION)


def flight_ascend(liftoff: HybridState, params: ModelParams, stride_index: int = 0) -> ApexState:
    if liftoff.ydot < 0:
        raise ValueError(f"liftoff velocity must be nonnegative, got {liftoff.ydot!r}")
    return ApexState(liftoff.y + liftoff.ydot**2 / (2.0 * params.g), stride_index)


def stance_step(
    state: HybridState,
    control: ControlInput,
    params: ModelParams,
    config: IntegratorConfig = HARNESS,
    record: bool = True,
) -> StanceResult:
    """Integrate one stance from touchdown to liftoff.

    Times in the returned states continue from ``state.t``; ``t_b``, ``t_lo``
    and ``t_star`` are stance-local.
    """
    p = params
    instant = p.instantaneous
    status, t_b, y_b, v_b, th_b, t_lo, y_lo, v_lo, th_lo, saturated, t_star, buf, ph = _stance_kernel(
        float(state.y), float(state.ydot), p.m, p.k, p.d_bar, p.l0, p.l1, p.l2, p.g,
        p.theta1, float(control.theta2), 1.0 if instant else float(p.omega), instant,
        config.dt, config.event_tol, config.max_stance_time, config.sample_stride, record, False,
    )
    if status == _STUCK:
        raise StanceStuck(
            f"no liftoff within {config.max_stance_time} s of stance "
            f"(touchdown ydot={state.ydot:.6g}, theta2={control.theta2:.6g})"
        )
    if status == _UNSTABLE:
        raise StepUnstable(f"non-finite state at stance time {t_lo!r}")
    t0 = state.t
    trace = Trace(
        [HybridState(t0 + row[0], row[1], row[2], row[3], _PHASE_OF[int(c)]) for row, c in zip(buf, ph)]
    )
    return StanceResult(
        trace=trace,
        state_b=HybridState(t0 + t_b, y_b, v_b, th_b, Phase.DECOMPRESSION),
        state_lo=HybridState(t0 + t_lo, y_lo, v_lo, th_lo, Phase.ASCENT),
        t_b=t_b,
        t_lo=t_lo,
        saturated=bool(saturated),
        t_star=t_star if t_star >= 0 else None,
    )


def compress(
    state: HybridState,
    control: ControlInput,
    params: ModelParams,
    config: IntegratorConfig = HARNESS,
) -> Tuple[float, HybridState, bool]:
    """Integrate touchdown to bottom only: ``(t_b, state_b, saturated)``."""
    p = params
    instant = p.instantaneous
    status, t_b, y_b, v_b, th_b, *_ , saturated, t_star, buf, ph = _stance_kernel(
        float(state.y), float(state.ydot), p.m, p.k, p.d_bar, p.l0, p.l1, p.l2, p.g,
        p.theta1, float(control.theta2), 1.0 if instant else float(p.omega), instant,
        config.dt, config.event_tol, config.max_stance_time, config.sample_stride, False, True,
    )
    if status == _STUCK:
        raise StanceStuck(f"no bottom within {config.max_stance_time} s of stance")
    if status == _UNSTABLE:
        raise StepUnstable("non-finite state before bottom")
    return t_b, HybridState(state.t + t_b, y_b, v_b, th_b, Phase.DECOMPRESSION), bool(saturated)


def apex_return(
    apex: ApexState,
    control: ControlInput,
    params: ModelParams,
    config: IntegratorConfig = HARNESS,
) -> Tuple[ApexState, StrideRecord]:
    """Numeric apex-to-apex return map: descent, compression, decompression, ascent."""
    validate(params)
    check_control(control, params)
    td = flight_descend(apex, params)
    st = stance_step(td, control, params, config, record=False)
    nxt = flight_ascend(st.state_lo, params, apex.stride_index + 1)
    t_apex = st.state_lo.t + st.state_lo.ydot / params.g
    rec = StrideRecord(
        control=control,
        t_td=td.t,
        t_b=st.t_b,
        t_lo=st.t_lo,
        t_apex=t_apex,
        state_td=td,
        state_b=st.state_b,
        state_lo=st.state_lo,
        y_a_next=nxt.y_a,
        saturated=st.saturated,
        t_star=st.t_star,
    )
    return nxt, rec


def _flight_samples(t0: float, y0: float, v0: float, duration: float, dt: float, theta: float, phase: Phase, g: float):
    n = max(int(math.floor(duration / dt)), 0)
    out = []
    for i in range(n):
        s = i * dt
        out.append(HybridState(t0 + s, y0 + v0 * s - 0.5 * g * s * s, v0 - g * s, theta, phase))
    return out


def stride_trace(
    apex: ApexState,
    control: ControlInput,
    params: ModelParams,
    config: IntegratorConfig = HARNESS,
    t0: float = 0.0,
) -> Tuple[Trace, StrideRecord]:
    """Full apex-to-apex numeric trace; the final sample is the next apex."""
    validate(params)
    check_control(control, params)
    g = params.g
    dt = config.dt * config.sample_stride
    td = flight_descend(apex, params)
    states = _flight_samples(t0, apex.y_a, 0.0, td.t, dt, params.theta1, Phase.DESCENT, g)
    td_abs = HybridState(t0 + td.t, td.y, td.ydot, td.theta, td.phase)
    st = stance_step(td_abs, control, params, config, record=True)
    states.extend(st.trace.states)
    lo = st.state_lo
    t_up = lo.ydot / g
    states.extend(_flight_samples(lo.t, lo.y, lo.ydot, t_up, dt, lo.theta, Phase.ASCENT, g)[1:])
    nxt = flight_ascend(lo, params, apex.stride_index + 1)
    # crank resets to theta1 at apex
    states.append(HybridState(lo.t + t_up, nxt.y_a, 0.0, params.theta1, Phase.DESCENT))
    rec = StrideRecord(
        control=control,
        t_td=td.t,
        t_b=st.t_b,
        t_lo=st.t_lo,
        t_apex=td.t + st.t_lo + t_up,
        state_td=td,
        state_b=HybridState(st.state_b.t - t0, *_tail(st.state_b)),
        state_lo=HybridState(lo.t - t0, *_tail(lo)),
        y_a_next=nxt.y_a,
        saturated=st.saturated,
        t_star=st.t_star,
    )
    return Trace(states), rec


def _tail(s: HybridState):
    return s.y, s.ydot, s.theta, s.phase


def simulate(
    apex: ApexState,
    controls: Sequence[ControlInput],
    params: ModelParams,
    config: IntegratorConfig = HARNESS,
) -> Tuple[Trace, List[StrideRecord]]:
    """Chain strides, one control per stride; times accumulate across strides."""
    states: List[HybridState] = []
    records: List[StrideRecord] = []
    t0 = 0.0
    cur = apex
    for u in controls:
        tr, rec = stride_trace(cur, u, params, config, t0)
        if states and tr.states[0].t == states[-1].t:
            tr.states.pop(0)  # shared apex sample
        states.extend(tr.states)
        records.append(rec)
        t0 += rec.t_apex
        cur = ApexState(rec.y_a_next, cur.stride_index + 1)
    return Trace(states), records
