"""Fixed points of the apex return map and their finite-difference eigenvalues."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .analytic import NEWTON, apex_return_hat
from .core import ApexState, ControlInput, MapUnevaluable, ModelParams, SlipError, YA_RANGE
from .roots import bisect
from .simulator import HARNESS, IntegratorConfig, apex_return

ANALYTIC = "analytic"
NUMERIC = "numeric"

FOUND = "found"
NOT_FOUND = "not-found"
CONTINUUM = "continuum"

FP_TOL = 1e-8
SCAN_STEP = 1e-3
D_APEX = 1e-4
D_THETA = 1e-4

MapFn = Callable[[float, float], float]


def return_map(kind: str, params: ModelParams, integrator: IntegratorConfig = HARNESS, liftoff: str = NEWTON) -> MapFn:
    """``(y_a, theta2) -> next apex`` for the analytic or numeric map."""
    if kind == ANALYTIC:
        return lambda y, th: apex_return_hat(y, ControlInput(th), params, liftoff)
    if kind == NUMERIC:
        return lambda y, th: apex_return(ApexState(y), ControlInput(th), params, integrator)[0].y_a
    raise ValueError(f"unknown map {kind!r}")


def _try(fn: MapFn, y: float, th: float) -> float:
    try:
        return fn(y, th)
    except SlipError:
        return math.nan


@dataclass(frozen=True)
class FixedPoint:
    y: Optional[float]
    status: str
    residual: float = math.nan
    crossings: int = 0


def find_fixed_point(
    theta2: float,
    fn: MapFn,
    y_range=YA_RANGE,
    step: float = SCAN_STEP,
    fp_tol: float = FP_TOL,
) -> FixedPoint:
    """Scan ``g(y) = map(y) - y`` for a sign change and bisect the first one.

    Points where the map raises are skipped; a sign change is only accepted
    between two adjacent evaluable scan points, and a bracket whose interior
    fails is passed over for the next.
    """
    lo, hi = y_range
    n = int(round((hi - lo) / step))
    ys = lo + step * np.arange(n + 1)
    ys[-1] = hi
    g = np.array([_try(fn, float(y), theta2) - y for y in ys])
    ok = ~np.isnan(g)
    if not ok.any():
        raise MapUnevaluable(f"map fails over the whole apex range at theta2={theta2!r}")
    if np.all(np.abs(g[ok]) < fp_tol):
        return FixedPoint(None, CONTINUUM, float(np.max(np.abs(g[ok]))), 0)
    brackets = [
        i for i in range(n) if ok[i] and ok[i + 1] and (g[i] == 0 or (g[i] < 0) != (g[i + 1] < 0))
    ]
    if not brackets:
        return FixedPoint(None, NOT_FOUND)
    for i in brackets:
        if g[i] == 0:
            y = float(ys[i])
        else:
            try:
                y = bisect(lambda x: fn(x, theta2) - x, float(ys[i]), float(ys[i + 1]), ftol=fp_tol)
            except SlipError:
                # the map fails somewhere inside this bracket; try the next one
                continue
        return FixedPoint(y, FOUND, abs(fn(y, theta2) - y), len(brackets))
    return FixedPoint(None, NOT_FOUND, math.nan, len(brackets))


def eigen_apex(theta2: float, y_fixed: float, fn: MapFn, delta: float = D_APEX) -> float:
    """``|map(y+d) - map(y-d)| / 2d``; one-sided when ``y-d`` has no touchdown."""
    up = fn(y_fixed + delta, theta2)
    try:
        down = fn(y_fixed - delta, theta2)
        return abs(up - down) / (2.0 * delta)
    except SlipError:
        return abs(up - fn(y_fixed, theta2)) / delta


def eigen_control(theta2: float, y_fixed: float, fn: MapFn, delta: float = D_THETA) -> float:
    """Forward difference ``|map(y, theta2 + d) - y| / d`` in metres per radian."""
    return abs(fn(y_fixed, theta2 + delta) - y_fixed) / delta


def per_degree(lambda_per_rad: float) -> float:
    return lambda_per_rad * math.pi / 180.0


@dataclass(frozen=True)
class StabilityRecord:
    theta2: float
    y_fixed: float
    exists: bool
    lambda_apex_aas: float
    lambda_apex_numeric: float
    lambda_control: float
    map: str = ANALYTIC
    status: str = NOT_FOUND
    residual: float = math.nan

    @property
    def lambda_control_per_deg(self) -> float:
        return per_degree(self.lambda_control)


def stability_point(
    theta2: float,
    kind: str,
    params: ModelParams,
    integrator: IntegratorConfig = HARNESS,
    liftoff: str = NEWTON,
) -> StabilityRecord:
    """Fixed point on the ``kind`` map, then both apex eigenvalues at that point."""
    maps = {k: return_map(k, params, integrator, liftoff) for k in (ANALYTIC, NUMERIC)}
    fn = maps[kind]
    fp = find_fixed_point(theta2, fn)
    if fp.status != FOUND:
        nan = math.nan
        return StabilityRecord(theta2, nan, False, nan, nan, nan, kind, fp.status, fp.residual)
    y = fp.y
    lam = {}
    for k, f in maps.items():
        try:
            lam[k] = eigen_apex(theta2, y, f)
        except SlipError:
            lam[k] = math.nan
    return StabilityRecord(
        theta2=theta2,
        y_fixed=y,
        exists=True,
        lambda_apex_aas=lam[ANALYTIC],
        lambda_apex_numeric=lam[NUMERIC],
        lambda_control=eigen_control(theta2, y, fn),
        map=kind,
        status=FOUND,
        residual=fp.residual,
    )


def stability_sweep(
    theta2_grid: Sequence[float],
    kind: str,
    params: ModelParams,
    integrator: IntegratorConfig = HARNESS,
    liftoff: str = NEWTON,
) -> List[StabilityRecord]:
    return [stability_point(float(th), kind, params, integrator, liftoff) for th in theta2_grid]


def existence_boundaries(
    records: Sequence[StabilityRecord],
    params: ModelParams,
    integrator: IntegratorConfig = HARNESS,
    tol: float = math.radians(0.1),
    liftoff: str = NEWTON,
) -> List[float]:
    """Refine every existence flip between adjacent sweep points to ``tol``.

    Returns the midpoints of the final brackets, in grid order.
    """
    out = []
    for a, b in zip(records, records[1:]):
        if a.exists == b.exists:
            continue
        fn = return_map(a.map, params, integrator, liftoff)
        lo, hi = a.theta2, b.theta2
        lo_exists = a.exists
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if (find_fixed_point(mid, fn).status == FOUND) == lo_exists:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return out


STABILITY_COLUMNS = (
    "theta2_deg",
    "y_fixed",
    "exists",
    "lambda_apex_aas",
    "lambda_apex_numeric",
    "lambda_control_per_rad",
    "lambda_control_per_deg",
    "map",
    "status",
    "residual",
    "theta2_rad",
)


def write_stability_csv(records: Sequence[StabilityRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STABILITY_COLUMNS)
        for r in records:
            w.writerow(
                (
                    repr(math.degrees(r.theta2)),
                    repr(float(r.y_fixed)),
                    int(r.exists),
                    repr(float(r.lambda_apex_aas)),
                    repr(float(r.lambda_apex_numeric)),
                    repr(float(r.lambda_control)),
                    repr(float(r.lambda_control_per_deg)),
                    r.map,
                    r.status,
                    repr(float(r.residual)),
                    repr(float(r.theta2)),
                )
            )


def read_stability_csv(path) -> List[StabilityRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                StabilityRecord(
                    theta2=float(row["theta2_rad"]),
                    y_fixed=float(row["y_fixed"]),
                    exists=bool(int(row["exists"])),
                    lambda_apex_aas=float(row["lambda_apex_aas"]),
                    lambda_apex_numeric=float(row["lambda_apex_numeric"]),
                    lambda_control=float(row["lambda_control_per_rad"]),
                    map=row["map"],
                    status=row["status"],
                    residual=float(row["residual"]),
                )
            )
    return out
