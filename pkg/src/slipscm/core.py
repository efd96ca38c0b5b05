"""Shared domain types, parameter validation and error vocabulary."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

#: Residual tolerance used for every event (metres or m/s as appropriate).
EVENT_TOL = 1e-9

#: Crank speed value denoting the instantaneous-compression mode.
INSTANT = math.inf


class SlipError(Exception):
    """Base class of every error raised by this package."""


class InvalidParams(SlipError, ValueError):
    pass


class OverDamped(InvalidParams):
    pass


class GeometryInvalid(InvalidParams):
    pass


class NonPositive(InvalidParams):
    pass


class InvalidControl(SlipError, ValueError):
    pass


class NoTouchdown(SlipError):
    pass


class StanceStuck(SlipError):
    pass


class StepUnstable(SlipError):
    pass


class NoBottom(SlipError):
    pass


class NoLiftoff(SlipError):
    pass


class DegenerateNewton(SlipError):
    pass


class ScheduleUndefined(SlipError):
    pass


class MapUnevaluable(SlipError):
    pass


class ConfigInvalid(SlipError, ValueError):
    pass


class CellFailed(SlipError):
    """A grid cell where either return map raised; ``cause`` holds the original error."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message)
        self.cause = cause


class Phase(str, enum.Enum):
    DESCENT = "Descent"
    COMPRESSION = "Compression"
    DECOMPRESSION = "Decompression"
    ASCENT = "Ascent"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the vertical hopper (SI units, angles in radians).

    ``omega`` is the crank angular speed; ``INSTANT`` (``math.inf``) selects the
    instantaneous-compression mode in which the crank jumps to its commanded
    angle at touchdown.
    """

    m: float = 3.0
    k: float = 2500.0
    d_bar: float = 10.0
    l0: float = 0.2
    l1: float = 0.1
    l2: float = 0.1
    g: float = 9.81
    omega: float = 20.0
    theta1: float = 0.0

    @property
    def instantaneous(self) -> bool:
        return math.isinf(self.omega)

    @property
    def damping_ratio(self) -> float:
        return self.d_bar / (2.0 * math.sqrt(self.m * self.k))

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ControlInput:
    theta2: float

    @classmethod
    def from_degrees(cls, deg: float) -> "ControlInput":
        return cls(math.radians(deg))

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta2)


@dataclass(frozen=True)
class HybridState:
    t: float
    y: float
    ydot: float
    theta: float
    phase: Phase


@dataclass(frozen=True)
class ApexState:
    y_a: float
    stride_index: int = 0


@dataclass(frozen=True)
class StrideRecord:
    """Event log of one apex-to-apex stride.

    ``t_td`` is measured from the starting apex; ``t_b`` and ``t_lo`` are
    stance-local (measured from touchdown); ``t_apex`` is the time of the next
    apex measured from the starting apex. States carry stride time in ``t``.
    ``t_star`` is the stance-local time the crank reached ``theta2`` (None when
    the bottom event froze it first).
    """

    control: ControlInput
    t_td: float
    t_b: float
    t_lo: float
    t_apex: float
    state_td: HybridState
    state_b: HybridState
    state_lo: HybridState
    y_a_next: float
    saturated: bool
    t_star: Optional[float] = field(default=None)


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if the model invariants hold, else raise."""
    p = params
    for name in ("m", "k", "g"):
        v = getattr(p, name)
        if not (math.isfinite(v) and v > 0):
            raise NonPositive(f"{name} must be finite and positive, got {v!r}")
    if not (math.isfinite(p.d_bar) and p.d_bar >= 0):
        raise NonPositive(f"d_bar must be finite and nonnegative, got {p.d_bar!r}")
    for name in ("l0", "l1", "l2"):
        v = getattr(p, name)
        if not (math.isfinite(v) and v > 0):
            raise GeometryInvalid(f"{name} must be finite and positive, got {v!r}")
    if p.l1 > p.l2:
        raise GeometryInvalid(f"l1 ({p.l1}) must not exceed l2 ({p.l2})")
    if p.d_bar**2 - 4.0 * p.m * p.k >= 0:
        raise OverDamped(
            f"d_bar^2 - 4mk = {p.d_bar**2 - 4.0 * p.m * p.k:g} >= 0; model must be under-damped"
        )
    if not (0.0 <= p.theta1 < math.pi / 2):
        raise GeometryInvalid(f"theta1 must lie in [0, pi/2), got {p.theta1!r}")
    if math.isnan(p.omega) or p.omega <= 0:
        raise NonPositive(f"omega must be positive or INSTANT, got {p.omega!r}")
    return params


def check_control(control: ControlInput, params: ModelParams) -> ControlInput:
    if not (params.theta1 <= control.theta2 < math.pi / 2):
        raise InvalidControl(
            f"theta2={control.theta2!r} outside [theta1={params.theta1!r}, pi/2)"
        )
    return control


TABLE2 = ModelParams()

#: Default grid ranges.
YA_RANGE = (0.4, 0.8)
THETA2_RANGE = (math.radians(15.0), math.radians(45.0))
