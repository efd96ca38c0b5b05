"""Approximate analytical stride map.

Stance is solved in closed form under the instantaneous-compression
assumption: the crank jumps from ``theta1`` to ``theta2`` at touchdown, so the
leg offset is the constant ``r2`` for the whole stance and the dynamics reduce
to a forced, under-damped linear oscillator. Liftoff is one Newton step on the
leg load ``h(t)`` started from twice the bottom time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from .core import (
    ApexState,
    ControlInput,
    DegenerateNewton,
    HybridState,
    ModelParams,
    NoBottom,
    NoLiftoff,
    NoTouchdown,
    Phase,
    check_control,
    validate,
)
from .kinematics import leg_offset
from .roots import bisect

NEWTON = "newton"
EXACT = "exact"


@dataclass(frozen=True)
class StanceCoefficients:
    xi: float
    w0: float
    wd: float
    F: float
    A1: float
    A2: float
    B1: float
    B2: float
    r1: float
    r2: float
    y_td: float
    ydot_td: float

    @property
    def y_eq(self) -> float:
        """Static equilibrium height of the stance oscillator."""
        return self.F / self.w0**2

    @property
    def decay(self) -> float:
        return self.xi * self.w0


def build_coefficients(y_td: float, ydot_td: float, control: ControlInput, params: ModelParams) -> StanceCoefficients:
    p = validate(params)
    r1 = leg_offset(p.theta1, p)
    r2 = leg_offset(control.theta2, p)
    xi = p.d_bar / (2.0 * math.sqrt(p.m * p.k))
    w0 = math.sqrt(p.k / p.m)
    wd = w0 * math.sqrt(1.0 - xi * xi)
    F = -p.g + p.k * p.l0 / p.m + p.k * r2 / p.m
    a = xi * w0
    A1 = y_td - F / w0**2
    A2 = (ydot_td + a * A1) / wd
    # velocity coefficients from differentiating the position solution
    B1 = wd * A2 - a * A1
    B2 = -(a * A2 + wd * A1)
    return StanceCoefficients(xi, w0, wd, F, A1, A2, B1, B2, r1, r2, y_td, ydot_td)


def stance_position(t: float, c: StanceCoefficients) -> float:
    wt = c.wd * t
    return math.exp(-c.decay * t) * (c.A1 * math.cos(wt) + c.A2 * math.sin(wt)) + c.y_eq


def stance_velocity(t: float, c: StanceCoefficients) -> float:
    wt = c.wd * t
    return math.exp(-c.decay * t) * (c.B1 * math.cos(wt) + c.B2 * math.sin(wt))


def stance_acceleration(t: float, c: StanceCoefficients) -> float:
    a, wd = c.decay, c.wd
    wt = wd * t
    return math.exp(-a * t) * ((wd * c.B2 - a * c.B1) * math.cos(wt) - (a * c.B2 + wd * c.B1) * math.sin(wt))


def touchdown_time(apex: ApexState, params: ModelParams) -> float:
    drop = apex.y_a - params.l0 - leg_offset(params.theta1, params)
    if drop < 0:
        raise NoTouchdown(f"apex {apex.y_a!r} m is below touchdown height")
    return math.sqrt(2.0 * drop / params.g)


def bottom_time(c: StanceCoefficients) -> float:
    """Smallest positive time where stance velocity crosses zero upward.

    A touchdown at exactly zero velocity counts as compressing when the
    initial acceleration points down.
    """
    if c.ydot_td > 0 or (c.ydot_td == 0 and stance_acceleration(0.0, c) >= 0):
        raise NoBottom(f"touchdown velocity {c.ydot_td!r} does not compress the leg")
    num = c.A2 * c.wd - c.A1 * c.decay
    den = c.A1 * c.wd + c.A2 * c.decay
    half = math.pi / c.wd
    t = math.atan(num / den) / c.wd if den != 0 else 0.5 * half
    # walk through the branches of the arctangent to the first upward crossing
    for _ in range(8):
        if t > 0 and stance_acceleration(t, c) > 0:
            return t
        t += half
    raise NoBottom("no upward velocity crossing found")


def leg_load(t: float, c: StanceCoefficients, params: ModelParams) -> float:
    return params.k * (stance_position(t, c) - params.l0 - c.r2) + params.d_bar * stance_velocity(t, c)


def leg_load_rate(t: float, c: StanceCoefficients, params: ModelParams) -> float:
    return params.k * stance_velocity(t, c) + params.d_bar * stance_acceleration(t, c)


def liftoff_time(c: StanceCoefficients, params: ModelParams, t_b: float | None = None) -> float:
    """One Newton step on the leg load from ``2 * t_b``; not iterated."""
    if t_b is None:
        t_b = bottom_time(c)
    t0 = 2.0 * t_b
    rate = leg_load_rate(t0, c, params)
    if abs(rate) < 1e-9:
        raise DegenerateNewton(f"leg load rate {rate!r} at initial guess {t0!r}")
    return t0 - leg_load(t0, c, params) / rate


def exact_liftoff_time(c: StanceCoefficients, params: ModelParams, t_b: float | None = None) -> float:
    """Root of the leg load on ``(t_b, t_b + pi/wd)`` by bisection."""
    if t_b is None:
        t_b = bottom_time(c)
    hi = t_b + math.pi / c.wd
    f = lambda t: leg_load(t, c, params)
    if f(hi) < 0:
        raise NoLiftoff("leg load stays negative over the decompression half-cycle")
    return bisect(f, t_b, hi)


@dataclass(frozen=True)
class AnalyticStride:
    coefficients: StanceCoefficients
    t_td: float
    t_b: float
    t_lo: float
    state_td: HybridState
    state_b: HybridState
    state_lo: HybridState
    y_a_next: float


def predict_stride(y_a: float, control: ControlInput, params: ModelParams, liftoff: str = NEWTON) -> AnalyticStride:
    """Analytic stride from apex ``y_a``; ``liftoff="exact"`` root-solves the load instead."""
    p = validate(params)
    check_control(control, p)
    t_td = touchdown_time(ApexState(y_a), p)
    y_td = p.l0 + leg_offset(p.theta1, p)
    ydot_td = -math.sqrt(2.0 * p.g * (y_a - y_td))
    c = build_coefficients(y_td, ydot_td, control, p)
    t_b = bottom_time(c)
    if liftoff == NEWTON:
        t_lo = liftoff_time(c, p, t_b)
    elif liftoff == EXACT:
        t_lo = exact_liftoff_time(c, p, t_b)
    else:
        raise ValueError(f"unknown liftoff mode {liftoff!r}")
    y_lo, v_lo = stance_position(t_lo, c), stance_velocity(t_lo, c)
    if not v_lo > 0:
        raise NoLiftoff(f"predicted liftoff velocity {v_lo!r} is not upward (t_lo={t_lo!r})")
    th2 = control.theta2
    return AnalyticStride(
        coefficients=c,
        t_td=t_td,
        t_b=t_b,
        t_lo=t_lo,
        state_td=HybridState(t_td, y_td, ydot_td, th2, Phase.COMPRESSION),
        state_b=HybridState(t_td + t_b, stance_position(t_b, c), stance_velocity(t_b, c), th2, Phase.DECOMPRESSION),
        state_lo=HybridState(t_td + t_lo, y_lo, v_lo, th2, Phase.ASCENT),
        y_a_next=y_lo + v_lo * v_lo / (2.0 * p.g),
    )


def apex_return_hat(y_a: float, control: ControlInput, params: ModelParams, liftoff: str = NEWTON) -> float:
    return predict_stride(y_a, control, params, liftoff).y_a_next


def liftoff_hat(y_a: float, control: ControlInput, params: ModelParams, liftoff: str = NEWTON) -> Tuple[float, float]:
    s = predict_stride(y_a, control, params, liftoff)
    return s.state_lo.y, s.state_lo.ydot


def stride_trace_hat(y_a: float, control: ControlInput, params: ModelParams, dt: float = 1e-4, liftoff: str = NEWTON):
    """Sampled analytic stride from apex to the predicted next apex.

    Returns ``(states, stride)`` with stride-time stamps comparable to the
    numeric trace.
    """
    s = predict_stride(y_a, control, params, liftoff)
    c, g = s.coefficients, params.g
    out = []
    n = int(math.floor(s.t_td / dt))
    for i in range(n):
        t = i * dt
        out.append(HybridState(t, y_a - 0.5 * g * t * t, -g * t, params.theta1, Phase.DESCENT))
    out.append(s.state_td)
    n = int(math.floor(s.t_lo / dt))
    for i in range(1, n + 1):
        t = i * dt
        if t >= s.t_lo:
            break
        ph = Phase.COMPRESSION if t < s.t_b else Phase.DECOMPRESSION
        out.append(HybridState(s.t_td + t, stance_position(t, c), stance_velocity(t, c), control.theta2, ph))
    lo = s.state_lo
    out.append(lo)
    t_up = lo.ydot / g
    n = int(math.floor(t_up / dt))
    for i in range(1, n + 1):
        t = i * dt
        if t >= t_up:
            break
        out.append(HybridState(lo.t + t, lo.y + lo.ydot * t - 0.5 * g * t * t, lo.ydot - g * t, control.theta2, Phase.ASCENT))
    out.append(HybridState(lo.t + t_up, s.y_a_next, 0.0, params.theta1, Phase.DESCENT))
    return out, s
