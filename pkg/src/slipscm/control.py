"""Deadbeat apex-height control through the analytic stride map."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .analytic import NEWTON, apex_return_hat
from .core import ApexState, ControlInput, MapUnevaluable, ModelParams, SlipError
from .roots import bisect, golden_section
from .simulator import HARNESS, IntegratorConfig, apex_return


@dataclass(frozen=True)
class DeadbeatConfig:
    theta_min: float = math.radians(15.0)
    theta_max: float = math.radians(45.0)
    tol_height: float = 1e-6
    max_evals: int = 200
    scan_points: int = 16
    liftoff: str = NEWTON

    def __post_init__(self):
        if not (0 <= self.theta_min < self.theta_max < math.pi / 2):
            raise ValueError("need 0 <= theta_min < theta_max < pi/2")
        if self.tol_height <= 0:
            raise ValueError("tol_height must be positive")


@dataclass(frozen=True)
class DeadbeatResult:
    control: ControlInput
    predicted: float
    saturated: bool
    method: str
    evals: int


def _safe(f: Callable[[float], float]) -> Callable[[float], float]:
    def g(x):
        try:
            return f(x)
        except SlipError:
            return math.nan

    return g


def deadbeat_theta(
    y_a_now: float,
    y_a_desired: float,
    params: ModelParams,
    config: DeadbeatConfig = DeadbeatConfig(),
) -> DeadbeatResult:
    """Crank angle whose predicted next apex is closest to ``y_a_desired``.

    Bisects ``fhat(theta) - y*`` when the predicted map is evaluable and
    non-decreasing on a coarse scan of the control range; otherwise refines the
    best scan point by golden section on ``|fhat - y*|``. A result further than
    ``tol_height`` from the target is flagged saturated.
    """
    cfg = config
    n_evals = 0

    def fhat(th: float) -> float:
        nonlocal n_evals
        n_evals += 1
        return apex_return_hat(y_a_now, ControlInput(th), params, cfg.liftoff)

    safe = _safe(fhat)
    grid = np.linspace(cfg.theta_min, cfg.theta_max, cfg.scan_points)
    vals = np.array([safe(th) for th in grid])
    if np.all(np.isnan(vals)):
        raise MapUnevaluable(f"predicted map fails over the whole control range at y_a={y_a_now!r}")

    monotone = not np.any(np.isnan(vals)) and bool(np.all(np.diff(vals) >= 0))
    if monotone:
        if y_a_desired <= vals[0]:
            th, pred = grid[0], vals[0]
        elif y_a_desired >= vals[-1]:
            th, pred = grid[-1], vals[-1]
        else:
            i = int(np.searchsorted(vals, y_a_desired))
            budget = max(cfg.max_evals - n_evals, 1)
            th = bisect(
                lambda x: fhat(x) - y_a_desired,
                float(grid[i - 1]),
                float(grid[i]),
                ftol=cfg.tol_height,
                max_iter=budget,
            )
            pred = fhat(th)
        method = "bisection"
    else:
        err = np.abs(vals - y_a_desired)
        err[np.isnan(err)] = np.inf
        i = int(np.argmin(err))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        obj = lambda x: abs(v - y_a_desired) if not math.isnan(v := safe(x)) else math.inf
        th, _ = golden_section(obj, float(lo), float(hi), xtol=1e-10, max_evals=max(cfg.max_evals - n_evals, 4))
        pred = safe(th)
        if math.isnan(pred) or abs(pred - y_a_desired) > err[i]:
            th, pred = grid[i], vals[i]
        method = "golden"
    th = float(th)
    return DeadbeatResult(
        control=ControlInput(th),
        predicted=float(pred),
        saturated=bool(abs(pred - y_a_desired) > cfg.tol_height),
        method=method,
        evals=n_evals,
    )


class TrackingAborted(SlipError):
    """A stride could not be planned or simulated; ``partial`` holds the strides completed."""

    def __init__(self, message: str, partial: "TrackingResult", cause: Exception):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


@dataclass
class TrackingResult:
    reference: np.ndarray
    achieved: np.ndarray
    controls: np.ndarray
    predicted: np.ndarray
    saturated: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def pct_error(self) -> np.ndarray:
        if len(self.reference) == 0:
            return np.zeros(0)
        return 100.0 * np.abs(self.reference - self.achieved) / self.reference

    @property
    def mean_error(self) -> float:
        e = self.pct_error
        return float(e.mean()) if len(e) else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("stride", "y_ref", "y_a", "theta2_deg", "pct_error"))
            for i, (r, a, th, e) in enumerate(zip(self.reference, self.achieved, self.controls, self.pct_error)):
                w.writerow((i, repr(float(r)), repr(float(a)), repr(math.degrees(th)), repr(float(e))))


def sine_reference(n: int = 100, mean: float = 0.6, amplitude: float = 0.15, period: float = 20.0) -> np.ndarray:
    k = np.arange(n)
    return mean + amplitude * np.sin(2.0 * np.pi * k / period)


def track(
    reference: Sequence[float],
    y_a_0: float,
    params: ModelParams,
    config: DeadbeatConfig = DeadbeatConfig(),
    plant: IntegratorConfig = HARNESS,
) -> TrackingResult:
    """Closed loop: deadbeat on the analytic map, numeric plant.

    Stride ``n`` starts from the apex produced by stride ``n-1`` and is scored
    against ``reference[n]``.
    """
    ref = np.asarray(reference, dtype=float)
    n = len(ref)
    achieved = np.zeros(n)
    controls = np.zeros(n)
    predicted = np.zeros(n)
    saturated = np.zeros(n, dtype=bool)
    meta = {
        "y_a_0": y_a_0,
        "plant_dt": plant.dt,
        "omega": params.omega,
        "liftoff": config.liftoff,
        "error": "100*|y_ref - y_a|/y_ref per stride",
    }
    y = y_a_0
    for i, target in enumerate(ref):
        try:
            db = deadbeat_theta(y, float(target), params, config)
            nxt, _ = apex_return(ApexState(y, i), db.control, params, plant)
        except SlipError as exc:
            part = TrackingResult(ref[:i], achieved[:i], controls[:i], predicted[:i], saturated[:i], meta)
            raise TrackingAborted(f"stride {i} from apex {y!r} m: {type(exc).__name__}: {exc}", part, exc) from exc
        achieved[i] = nxt.y_a
        controls[i] = db.control.theta2
        predicted[i] = db.predicted
        saturated[i] = db.saturated
        y = nxt.y_a
    return TrackingResult(ref, achieved, controls, predicted, saturated, meta)
