"""Desk-scale experiments: prediction-error grid, error projection, omega
calibration and paired single-stride traces."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analytic import NEWTON, predict_stride, stride_trace_hat
from .core import (
    INSTANT,
    THETA2_RANGE,
    YA_RANGE,
    ApexState,
    CellFailed,
    ControlInput,
    HybridState,
    ModelParams,
    SlipError,
    StrideRecord,
    validate,
)
from .roots import bisect
from .simulator import HARNESS, IntegratorConfig, Trace, apex_return, compress, flight_descend, stride_trace

#: Crank speed (rad/s) placing the default-parameter saturation boundary at 32 degrees;
#: reproduced by ``calibrate_omega()``.
CALIBRATED_OMEGA = 8.913216188549995

METADATA = {
    "error_metric": "E_ap = 100*|f - fhat|/f on the next apex; E_lv = 100*|ydot_lo - ydot_lo_hat|/ydot_lo",
    "ground_truth": "numeric map",
    "std": "population",
    "theta_sat": "smallest theta2 whose column holds a stance where the crank missed theta2 before bottom",
}


@dataclass(frozen=True)
class GridSpec:
    ya_range: Tuple[float, float] = YA_RANGE
    ya_count: int = 100
    theta2_range: Tuple[float, float] = THETA2_RANGE
    theta2_count: int = 100
    omega: float = INSTANT
    integrator: IntegratorConfig = HARNESS
    liftoff: str = NEWTON

    def __post_init__(self):
        if self.ya_count < 2 or self.theta2_count < 2:
            raise ValueError("grid counts must be >= 2")

    @property
    def ya(self) -> np.ndarray:
        return np.linspace(*self.ya_range, self.ya_count)

    @property
    def theta2(self) -> np.ndarray:
        return np.linspace(*self.theta2_range, self.theta2_count)


@dataclass(frozen=True)
class CellResult:
    E_ap: float
    E_lv: float
    saturated: bool
    y_next: float
    y_next_hat: float
    ydot_lo: float
    ydot_lo_hat: float


def pct_error(truth: float, predicted: float) -> float:
    """``100 * |truth - predicted| / truth``."""
    return 100.0 * abs(truth - predicted) / truth


def prediction_errors(y_a: float, theta2: float, params: ModelParams, spec: GridSpec = GridSpec()) -> CellResult:
    """Percentage errors of the analytic map against the numeric map at one cell."""
    p = params.with_(omega=spec.omega)
    u = ControlInput(theta2)
    try:
        _, rec = apex_return(ApexState(y_a), u, p, spec.integrator)
        hat = predict_stride(y_a, u, p, spec.liftoff)
    except SlipError as exc:
        raise CellFailed(f"cell y_a={y_a!r}, theta2={math.degrees(theta2):.4f} deg: {exc}", exc) from exc
    y, yh = rec.y_a_next, hat.y_a_next
    v, vh = rec.state_lo.ydot, hat.state_lo.ydot
    return CellResult(
        E_ap=pct_error(y, yh),
        E_lv=pct_error(v, vh),
        saturated=rec.saturated,
        y_next=y,
        y_next_hat=yh,
        ydot_lo=v,
        ydot_lo_hat=vh,
    )


@dataclass
class GridResult:
    spec: GridSpec
    ya: np.ndarray
    theta2: np.ndarray
    E_ap: np.ndarray  # (n_ya, n_theta), nan where failed
    E_lv: np.ndarray
    saturated: np.ndarray
    failed: np.ndarray
    metadata: dict = field(default_factory=dict)

    def _stats(self, a: np.ndarray) -> Tuple[float, float]:
        v = a[~self.failed]
        return float(v.mean()), float(v.std())

    @property
    def E_ap_stats(self) -> Tuple[float, float]:
        return self._stats(self.E_ap)

    @property
    def E_lv_stats(self) -> Tuple[float, float]:
        return self._stats(self.E_lv)

    def projection(self) -> np.ndarray:
        """Per-theta2 rows ``(theta2, mean_E_ap, std_E_ap, mean_E_lv, std_E_lv)``."""
        rows = []
        for j, th in enumerate(self.theta2):
            ok = ~self.failed[:, j]
            ea, el = self.E_ap[ok, j], self.E_lv[ok, j]
            if ok.any():
                rows.append((th, ea.mean(), ea.std(), el.mean(), el.std()))
            else:
                rows.append((th, math.nan, math.nan, math.nan, math.nan))
        return np.array(rows)

    @property
    def theta_sat(self) -> Optional[float]:
        """Smallest theta2 with a non-saturated stance in its column; None if none."""
        if math.isinf(self.spec.omega):
            return None
        cols = np.where((~self.saturated & ~self.failed).any(axis=0))[0]
        return float(self.theta2[cols[0]]) if len(cols) else None

    def discontinuity(self) -> Optional[float]:
        """Midpoint between the adjacent columns with the largest jump in mean E_ap."""
        proj = self.projection()
        jumps = np.abs(np.diff(proj[:, 1]))
        if np.all(np.isnan(jumps)):
            return None
        j = int(np.nanargmax(jumps))
        return float(0.5 * (proj[j, 0] + proj[j + 1, 0]))

    def summary(self) -> str:
        (ma, sa), (ml, sl) = self.E_ap_stats, self.E_lv_stats
        s = f"E_ap = {ma:.2f} ± {sa:.2f} %, E_lv = {ml:.2f} ± {sl:.2f} % ({int(self.failed.sum())} failed cells)"
        if self.theta_sat is not None:
            s += f", theta_sat = {math.degrees(self.theta_sat):.2f} deg"
        return s

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("y_a", "theta2_deg", "E_ap_pct", "E_lv_pct", "saturated", "failed"))
            for i, ya in enumerate(self.ya):
                for j, th in enumerate(self.theta2):
                    w.writerow(
                        (
                            repr(float(ya)),
                            repr(math.degrees(th)),
                            repr(float(self.E_ap[i, j])),
                            repr(float(self.E_lv[i, j])),
                            int(self.saturated[i, j]),
                            int(self.failed[i, j]),
                        )
                    )

    def write_projection_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("theta2_deg", "mean_E_ap", "std_E_ap", "mean_E_lv", "std_E_lv"))
            for th, ma, sa, ml, sl in self.projection():
                w.writerow((repr(math.degrees(th)), repr(ma), repr(sa), repr(ml), repr(sl)))


def run_grid(spec: GridSpec, params: ModelParams) -> GridResult:
    validate(params.with_(omega=spec.omega))
    ya, th = spec.ya, spec.theta2
    shape = (len(ya), len(th))
    E_ap = np.full(shape, np.nan)
    E_lv = np.full(shape, np.nan)
    sat = np.zeros(shape, dtype=bool)
    failed = np.zeros(shape, dtype=bool)
    errors = {}
    for j, t2 in enumerate(th):
        for i, y in enumerate(ya):
            try:
                c = prediction_errors(float(y), float(t2), params, spec)
            except CellFailed as exc:
                failed[i, j] = True
                name = type(exc.cause).__name__
                errors[name] = errors.get(name, 0) + 1
                continue
            E_ap[i, j], E_lv[i, j], sat[i, j] = c.E_ap, c.E_lv, c.saturated
    meta = dict(METADATA)
    meta["failures"] = errors
    return GridResult(spec, ya, th, E_ap, E_lv, sat, failed, meta)


# --------------------------------------------------------------------------
# omega calibration


def saturation_margin(
    theta2: float,
    omega: float,
    params: ModelParams,
    ya_values: Sequence[float],
    integrator: IntegratorConfig = HARNESS,
) -> float:
    """``min over y_a of (t_b - t*)``; negative when some stance misses ``theta2``."""
    p = params.with_(omega=omega)
    t_star = (theta2 - p.theta1) / omega
    u = ControlInput(theta2)
    worst = math.inf
    for y in ya_values:
        t_b, _, _ = compress(flight_descend(ApexState(float(y)), p), u, p, integrator)
        worst = min(worst, t_b - t_star)
    return worst


def calibrate_omega(
    params: ModelParams,
    theta_boundary: float = math.radians(32.0),
    ya_values: Optional[Sequence[float]] = None,
    bracket: Tuple[float, float] = (2.0, 60.0),
    integrator: IntegratorConfig = HARNESS,
    tol: float = 1e-6,
) -> float:
    """Crank speed at which the crank just reaches ``theta_boundary`` by bottom for every apex."""
    if ya_values is None:
        ya_values = np.linspace(*YA_RANGE, 100)
    f = lambda w: saturation_margin(theta_boundary, w, params, ya_values, integrator)
    return bisect(f, bracket[0], bracket[1], xtol=tol)


# --------------------------------------------------------------------------
# paired traces


@dataclass
class PairedTraces:
    numeric: Trace
    analytic: Trace
    numeric_events: StrideRecord
    analytic_events: dict


def single_stride_trace(
    y_a: float,
    theta2: float,
    params: ModelParams,
    integrator: IntegratorConfig = HARNESS,
    liftoff: str = NEWTON,
) -> PairedTraces:
    u = ControlInput(theta2)
    num, rec = stride_trace(ApexState(y_a), u, params, integrator)
    states, s = stride_trace_hat(y_a, u, params, integrator.dt * integrator.sample_stride, liftoff)
    events = {
        "t_td": s.t_td,
        "t_b": s.t_b,
        "t_lo": s.t_lo,
        "t_apex": states[-1].t,
        "y_a_next": s.y_a_next,
    }
    return PairedTraces(num, Trace(states), rec, events)


def write_paired_csv(pair: PairedTraces, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("source", "t", "y", "ydot", "theta", "phase"))
        for name, tr in (("numeric", pair.numeric), ("analytic", pair.analytic)):
            for s in tr:
                w.writerow((name, repr(float(s.t)), repr(float(s.y)), repr(float(s.ydot)), repr(float(s.theta)), s.phase.value))


def read_paired_csv(path) -> Tuple[Trace, Trace]:
    from .core import Phase

    out = {"numeric": [], "analytic": []}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out[r["source"]].append(
                HybridState(float(r["t"]), float(r["y"]), float(r["ydot"]), float(r["theta"]), Phase(r["phase"]))
            )
    return Trace(out["numeric"]), Trace(out["analytic"])


def paired_events(pair: PairedTraces) -> List[Tuple[str, float, float]]:
    """``(event, numeric time, analytic time)`` on the stride clock."""
    r, a = pair.numeric_events, pair.analytic_events
    return [
        ("touchdown", r.t_td, a["t_td"]),
        ("bottom", r.t_td + r.t_b, a["t_td"] + a["t_b"]),
        ("liftoff", r.t_td + r.t_lo, a["t_td"] + a["t_lo"]),
        ("apex", r.t_apex, a["t_apex"]),
    ]
