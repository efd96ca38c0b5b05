"""Slider-crank geometry and stance crank-angle schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import ModelParams, ScheduleUndefined


def rod_angle(theta: float, params: ModelParams) -> float:
    """Angle between crank arm and connecting rod."""
    return math.asin(params.l1 / params.l2 * math.sin(theta))


def leg_offset(theta: float, params: ModelParams) -> float:
    """Body-to-spring distance ``l1 cos(theta) + l2 cos(alpha)``."""
    return params.l1 * math.cos(theta) + params.l2 * math.cos(rod_angle(theta, params))


@dataclass(frozen=True)
class CrankSchedule:
    """Piecewise-linear crank angle during stance.

    Exactly one of ``t_star`` (crank reached ``theta2``) and ``t_freeze``
    (bottom event stopped the crank early) fixes the plateau. While neither is
    known the ramp is only defined up to ``horizon``.
    """

    theta1: float
    theta2: float
    omega: float
    t_star: Optional[float] = None
    t_freeze: Optional[float] = None
    horizon: float = math.inf

    @property
    def instantaneous(self) -> bool:
        return math.isinf(self.omega)

    @property
    def plateau(self) -> Optional[float]:
        if self.instantaneous or self.t_star is not None:
            return self.theta2
        if self.t_freeze is not None:
            return self.omega * self.t_freeze + self.theta1
        return None


def crank_schedule(
    theta1: float,
    theta2: float,
    omega: float,
    t_bottom: Optional[float] = None,
    horizon: float = math.inf,
) -> CrankSchedule:
    """Build the schedule for one stance.

    ``t_bottom`` is the stance-local bottom time if already known. Without it
    the saturation time is taken as established unless it lies beyond
    ``horizon`` (the stance simulated so far).
    """
    if math.isinf(omega):
        return CrankSchedule(theta1, theta2, omega, t_star=0.0)
    t_sat = (theta2 - theta1) / omega
    if t_bottom is not None:
        if t_sat <= t_bottom:
            return CrankSchedule(theta1, theta2, omega, t_star=t_sat)
        return CrankSchedule(theta1, theta2, omega, t_freeze=t_bottom)
    if t_sat <= horizon:
        return CrankSchedule(theta1, theta2, omega, t_star=t_sat)
    return CrankSchedule(theta1, theta2, omega, horizon=horizon)


def crank_angle_at(t: float, schedule: CrankSchedule) -> float:
    if t < 0:
        raise ValueError(f"stance time must be nonnegative, got {t!r}")
    s = schedule
    if s.instantaneous:
        return s.theta2
    if s.t_star is not None:
        return s.theta2 if t >= s.t_star else s.omega * t + s.theta1
    if s.t_freeze is not None:
        return s.omega * min(t, s.t_freeze) + s.theta1
    if t > s.horizon:
        raise ScheduleUndefined(
            f"t={t!r} beyond simulated stance {s.horizon!r} with no plateau established"
        )
    return s.omega * t + s.theta1
