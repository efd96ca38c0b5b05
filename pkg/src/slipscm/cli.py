"""Command-line front end.

Every run resolves one flat configuration (defaults, then preset, then
``--config`` file, then flags), writes its CSV outputs and figures into
``--out`` and echoes the resolved configuration to ``metadata.json`` there.
Passing that file back through ``--config`` (or ``rerun``) repeats the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .analytic import EXACT, NEWTON, stride_trace_hat
from .control import DeadbeatConfig, TrackingAborted, sine_reference, track
from .core import INSTANT, ApexState, ConfigInvalid, ControlInput, ModelParams, SlipError, validate
from .harness import (
    CALIBRATED_OMEGA,
    GridSpec,
    calibrate_omega,
    paired_events,
    run_grid,
    single_stride_trace,
    write_paired_csv,
)
from .simulator import IntegratorConfig, Trace, simulate, write_trace_csv
from .stability import ANALYTIC, NUMERIC, existence_boundaries, stability_sweep, write_stability_csv

EXPERIMENTS = ("simulate", "predict", "compare", "grid", "track", "stability", "calibrate-omega")

DEFAULTS: Dict[str, Any] = {
    "experiment.name": None,
    "model.m": 3.0,
    "model.k": 2500.0,
    "model.d_bar": 10.0,
    "model.l0": 0.2,
    "model.l1": 0.1,
    "model.l2": 0.1,
    "model.g": 9.81,
    "model.theta1_deg": 0.0,
    "model.omega": 20.0,
    "integrator.dt": 1e-4,
    "integrator.event_tol": 1e-9,
    "integrator.max_stance_time": 2.0,
    "integrator.sample_stride": 1,
    "analytic.liftoff": NEWTON,
    "stride.ya": 0.6,
    "stride.theta2_deg": [30.0],
    "grid.ya_min": 0.4,
    "grid.ya_max": 0.8,
    "grid.ya_count": 100,
    "grid.theta2_min_deg": 15.0,
    "grid.theta2_max_deg": 45.0,
    "grid.theta2_count": 100,
    "track.reference": "sine",
    "track.y0": 0.6,
    "track.y_ref": 0.6,
    "track.strides": 100,
    "track.sine_mean": 0.6,
    "track.sine_amplitude": 0.15,
    "track.sine_period": 20.0,
    "track.tol_height": 1e-6,
    "track.scan_points": 16,
    "stability.map": ANALYTIC,
    "stability.theta2_min_deg": 15.0,
    "stability.theta2_max_deg": 45.0,
    "stability.theta2_step_deg": 1.0,
    "stability.boundary_tol_deg": 0.1,
    "calibrate.boundary_deg": 32.0,
    "calibrate.ya_count": 100,
    "calibrate.omega_lo": 2.0,
    "calibrate.omega_hi": 60.0,
    "output.dir": "out",
    "output.svg": False,
    "output.plots": True,
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "table2": {
        "model.m": 3.0,
        "model.k": 2500.0,
        "model.d_bar": 10.0,
        "model.l0": 0.2,
        "model.l1": 0.1,
        "model.l2": 0.1,
        "model.g": 9.81,
        "model.theta1_deg": 0.0,
    },
}
PRESETS["table2-calibrated"] = dict(PRESETS["table2"], **{"model.omega": CALIBRATED_OMEGA})


# --------------------------------------------------------------------------
# configuration


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_config_file(path) -> dict:
    """Flat ``section.key`` mapping from a JSON file; a metadata file's ``config`` block is accepted."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"config {path} must hold a JSON object")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    flat = _flatten(raw)
    unknown = sorted(set(flat) - set(DEFAULTS))
    if unknown:
        raise ConfigInvalid(f"unknown config keys in {path}: {', '.join(unknown)}")
    return flat


def parse_mode(text: str):
    """``instant`` / ``instantaneous`` or ``omega=VALUE`` (rad/s)."""
    t = text.strip().lower()
    if t in ("instant", "instantaneous", "inf"):
        return "instant"
    if t.startswith("omega="):
        try:
            w = float(t[6:])
        except ValueError:
            raise ConfigInvalid(f"bad crank speed in --mode {text!r}") from None
        if not (math.isfinite(w) and w > 0):
            raise ConfigInvalid(f"crank speed must be finite and positive, got {text!r}")
        return w
    raise ConfigInvalid(f"--mode must be 'instant' or 'omega=VALUE', got {text!r}")


def _omega(cfg: dict) -> float:
    w = cfg["model.omega"]
    if isinstance(w, str):
        if parse_mode(w) == "instant":
            return INSTANT
        return float(parse_mode(w))
    return float(w)


def model_params(cfg: dict) -> ModelParams:
    try:
        p = ModelParams(
            m=float(cfg["model.m"]),
            k=float(cfg["model.k"]),
            d_bar=float(cfg["model.d_bar"]),
            l0=float(cfg["model.l0"]),
            l1=float(cfg["model.l1"]),
            l2=float(cfg["model.l2"]),
            g=float(cfg["model.g"]),
            omega=_omega(cfg),
            theta1=math.radians(float(cfg["model.theta1_deg"])),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SlipError):
            raise
        raise ConfigInvalid(f"bad model parameter: {exc}") from exc
    return validate(p)


def integrator_config(cfg: dict) -> IntegratorConfig:
    try:
        return IntegratorConfig(
            dt=float(cfg["integrator.dt"]),
            event_tol=float(cfg["integrator.event_tol"]),
            max_stance_time=float(cfg["integrator.max_stance_time"]),
            sample_stride=int(cfg["integrator.sample_stride"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad integrator setting: {exc}") from exc


def _jsonable(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if isinstance(v, float) and math.isinf(v):
            v = "instant"
        out[k] = v
    return out


# --------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", metavar="PATH", help="JSON file of flat 'section.key' settings (metadata.json works)")
    g.add_argument("--preset", choices=sorted(PRESETS), help="pinned parameter bundle applied before --config")
    g.add_argument("--mode", metavar="MODE", help="crank mode: 'instant' or 'omega=VALUE' in rad/s")
    g.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    g.add_argument("--svg", action="store_true", default=None, help="also write SVG copies of figures")
    g.add_argument("--no-plots", dest="plots", action="store_false", default=None, help="skip figures")
    g.add_argument("--dt", type=float, help="stance integrator step [s]")
    g.add_argument("--liftoff", choices=(NEWTON, EXACT), help="analytic liftoff time: one Newton step or exact root")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, e.g. --set model.d_bar=0 (repeatable)")


def _stride_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ya", type=float, help="initial apex height [m]")
    p.add_argument("--theta2-deg", type=float, nargs="+", metavar="DEG",
                   help="commanded crank angle [deg]; several values run several strides")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slipscm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="numeric stride or multi-stride trace")
    _stride_args(p)
    _common(p)
    p = sub.add_parser("predict", help="analytic single-stride prediction")
    _stride_args(p)
    _common(p)
    p = sub.add_parser("compare", help="numeric vs analytic single stride with aligned events")
    _stride_args(p)
    _common(p)

    p = sub.add_parser("grid", help="prediction-error grid and its theta2 projection")
    p.add_argument("--ya-count", type=int, help="apex heights in the grid")
    p.add_argument("--theta2-count", type=int, help="crank angles in the grid")
    _common(p)

    p = sub.add_parser("track", help="deadbeat apex tracking on the numeric plant")
    p.add_argument("--reference", choices=("sine", "constant"), help="reference sequence")
    p.add_argument("--y0", type=float, help="initial apex height [m]")
    p.add_argument("--y-ref", type=float, help="constant reference height [m]")
    p.add_argument("--strides", type=int, help="number of strides")
    _common(p)

    p = sub.add_parser("stability", help="fixed points and eigenvalues over theta2")
    p.add_argument("--map", choices=(ANALYTIC, NUMERIC), help="map whose fixed points are located")
    p.add_argument("--step-deg", type=float, help="theta2 sweep step [deg]")
    _common(p)

    p = sub.add_parser("calibrate-omega", help="crank speed placing the saturation boundary at a given angle")
    p.add_argument("--boundary-deg", type=float, help="target saturation boundary [deg]")
    _common(p)

    p = sub.add_parser("rerun", help="repeat a run from its metadata.json")
    p.add_argument("metadata", help="metadata.json written by an earlier run")
    p.add_argument("--out", metavar="DIR", help="output directory (default: the recorded one)")
    return ap


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "preset", None):
        cfg.update(PRESETS[args.preset])
    if getattr(args, "config", None):
        cfg.update(load_config_file(args.config))
    name = cfg.get("experiment.name")
    if name is not None and name != args.command:
        raise ConfigInvalid(f"config is for experiment {name!r}, not {args.command!r}")
    cfg["experiment.name"] = args.command

    flag_map = {
        "out": "output.dir",
        "svg": "output.svg",
        "plots": "output.plots",
        "dt": "integrator.dt",
        "liftoff": "analytic.liftoff",
        "ya": "stride.ya",
        "theta2_deg": "stride.theta2_deg",
        "ya_count": "grid.ya_count",
        "theta2_count": "grid.theta2_count",
        "reference": "track.reference",
        "y0": "track.y0",
        "y_ref": "track.y_ref",
        "strides": "track.strides",
        "map": "stability.map",
        "step_deg": "stability.theta2_step_deg",
        "boundary_deg": "calibrate.boundary_deg",
    }
    for attr, key in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "mode", None):
        m = parse_mode(args.mode)
        cfg["model.omega"] = m
    for item in getattr(args, "set", []) or []:
        if "=" not in item:
            raise ConfigInvalid(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if k not in DEFAULTS or k == "experiment.name":
            raise ConfigInvalid(f"unknown config key {k!r}")
        cfg[k] = _parse_value(v)
    if not isinstance(cfg["stride.theta2_deg"], list):
        cfg["stride.theta2_deg"] = [cfg["stride.theta2_deg"]]
    if cfg["analytic.liftoff"] not in (NEWTON, EXACT):
        raise ConfigInvalid(f"analytic.liftoff must be {NEWTON!r} or {EXACT!r}")
    return cfg


# --------------------------------------------------------------------------
# experiments


class Run:
    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.out = Path(cfg["output.dir"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: List[str] = []
        self.results: Dict[str, Any] = {}
        self.params = model_params(cfg)
        self.integrator = integrator_config(cfg)

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(p.name)
        return p

    def figure(self, fn, obj, stem: str, **kw) -> None:
        if not self.cfg["output.plots"]:
            return
        for p in fn(obj, self.out / stem, svg=bool(self.cfg["output.svg"]), **kw):
            self.files.append(p.name)

    def write_metadata(self, status: str, error: Optional[str] = None) -> None:
        meta = {
            "version": __version__,
            "status": status,
            "config": _jsonable(self.cfg),
            "results": self.results,
            "files": self.files,
        }
        if error:
            meta["error"] = error
        (self.out / "metadata.json").write_text(json.dumps(meta, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _controls(cfg: dict) -> List[ControlInput]:
    return [ControlInput.from_degrees(float(d)) for d in cfg["stride.theta2_deg"]]


def _write_strides(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("stride", "theta2_deg", "t_td", "t_b", "t_lo", "t_apex", "y_lo", "ydot_lo", "y_a_next", "saturated"))
        for i, r in enumerate(records):
            w.writerow(
                (i, *(repr(float(x)) for x in (r.control.degrees, r.t_td, r.t_b, r.t_lo, r.t_apex,
                                                r.state_lo.y, r.state_lo.ydot, r.y_a_next)), int(r.saturated))
            )


def run_simulate(run: Run) -> str:
    cfg = run.cfg
    trace, recs = simulate(ApexState(float(cfg["stride.ya"])), _controls(cfg), run.params, run.integrator)
    write_trace_csv(trace, run.path("trace.csv"))
    _write_strides(run.path("strides.csv"), recs)
    run.results["apex_heights"] = [float(cfg["stride.ya"])] + [r.y_a_next for r in recs]
    return f"{len(recs)} stride(s); final apex {recs[-1].y_a_next:.6f} m"


def run_predict(run: Run) -> str:
    cfg = run.cfg
    u = _controls(cfg)[0]
    states, s = stride_trace_hat(float(cfg["stride.ya"]), u, run.params, run.integrator.dt, cfg["analytic.liftoff"])
    write_trace_csv(Trace(states), run.path("trace.csv"))
    c = s.coefficients
    run.results.update(
        t_td=s.t_td, t_b=s.t_b, t_lo=s.t_lo, y_lo=s.state_lo.y, ydot_lo=s.state_lo.ydot, y_a_next=s.y_a_next,
        xi=c.xi, w0=c.w0, wd=c.wd, y_eq=c.y_eq, A1=c.A1, A2=c.A2, B1=c.B1, B2=c.B2,
    )
    return f"predicted next apex {s.y_a_next:.6f} m, liftoff velocity {s.state_lo.ydot:.6f} m/s"


def run_compare(run: Run) -> str:
    cfg = run.cfg
    from .plotting import plot_paired

    pair = single_stride_trace(
        float(cfg["stride.ya"]), _controls(cfg)[0].theta2, run.params, run.integrator, cfg["analytic.liftoff"]
    )
    write_paired_csv(pair, run.path("paired.csv"))
    ev = paired_events(pair)
    with open(run.path("events.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("event", "t_numeric", "t_analytic", "dt"))
        for name, tn, ta in ev:
            w.writerow((name, repr(float(tn)), repr(float(ta)), repr(float(ta - tn))))
    run.figure(plot_paired, pair, "compare")
    y, yh = pair.numeric_events.y_a_next, pair.analytic_events["y_a_next"]
    run.results.update(y_a_next=y, y_a_next_hat=yh, events={n: [a, b] for n, a, b in ev})
    return f"next apex numeric {y:.6f} m, analytic {yh:.6f} m ({100 * abs(y - yh) / y:.3f} %)"


def run_grid_cmd(run: Run) -> str:
    cfg = run.cfg
    from .plotting import plot_projection

    spec = GridSpec(
        ya_range=(float(cfg["grid.ya_min"]), float(cfg["grid.ya_max"])),
        ya_count=int(cfg["grid.ya_count"]),
        theta2_range=(math.radians(cfg["grid.theta2_min_deg"]), math.radians(cfg["grid.theta2_max_deg"])),
        theta2_count=int(cfg["grid.theta2_count"]),
        omega=run.params.omega,
        integrator=run.integrator,
        liftoff=cfg["analytic.liftoff"],
    )
    res = run_grid(spec, run.params)
    res.write_csv(run.path("grid.csv"))
    res.write_projection_csv(run.path("projection.csv"))
    run.figure(plot_projection, res, "projection")
    (ma, sa), (ml, sl) = res.E_ap_stats, res.E_lv_stats
    d = res.discontinuity()
    run.results.update(
        E_ap_mean=ma, E_ap_std=sa, E_lv_mean=ml, E_lv_std=sl,
        failed_cells=int(res.failed.sum()), failures=res.metadata["failures"],
        theta_sat_deg=None if res.theta_sat is None else math.degrees(res.theta_sat),
        discontinuity_deg=None if d is None else math.degrees(d),
        metrics=res.metadata,
    )
    return res.summary()


def run_track(run: Run) -> str:
    cfg = run.cfg
    from .plotting import plot_tracking

    n = int(cfg["track.strides"])
    if cfg["track.reference"] == "sine":
        ref = sine_reference(n, float(cfg["track.sine_mean"]), float(cfg["track.sine_amplitude"]), float(cfg["track.sine_period"]))
    elif cfg["track.reference"] == "constant":
        ref = np.full(n, float(cfg["track.y_ref"]))
    else:
        raise ConfigInvalid(f"track.reference must be 'sine' or 'constant', got {cfg['track.reference']!r}")
    dc = DeadbeatConfig(
        tol_height=float(cfg["track.tol_height"]),
        scan_points=int(cfg["track.scan_points"]),
        liftoff=cfg["analytic.liftoff"],
    )
    try:
        res = track(ref, float(cfg["track.y0"]), run.params, dc, run.integrator)
    except TrackingAborted as exc:
        exc.partial.to_csv(run.path("track.csv"))
        run.results.update(completed_strides=len(exc.partial.reference), mean_pct_error=exc.partial.mean_error)
        raise
    res.to_csv(run.path("track.csv"))
    run.figure(plot_tracking, res, "track")
    run.results.update(
        mean_pct_error=res.mean_error,
        final_pct_error=float(res.pct_error[-1]),
        saturated_strides=int(res.saturated.sum()),
        metric=res.metadata["error"],
    )
    return f"mean tracking error {res.mean_error:.4g} % over {n} strides ({int(res.saturated.sum())} saturated)"


def run_stability(run: Run) -> str:
    cfg = run.cfg
    from .plotting import plot_eigenvalues, plot_lambda_families

    lo, hi, step = (float(cfg[f"stability.theta2_{k}_deg"]) for k in ("min", "max", "step"))
    if step <= 0:
        raise ConfigInvalid("stability.theta2_step_deg must be positive")
    grid = np.radians(np.arange(lo, hi + 0.5 * step, step))
    kind = cfg["stability.map"]
    if kind not in (ANALYTIC, NUMERIC):
        raise ConfigInvalid(f"stability.map must be {ANALYTIC!r} or {NUMERIC!r}")
    recs = stability_sweep(grid, kind, run.params, run.integrator, cfg["analytic.liftoff"])
    bounds = existence_boundaries(
        recs, run.params, run.integrator, math.radians(float(cfg["stability.boundary_tol_deg"])), cfg["analytic.liftoff"]
    )
    write_stability_csv(recs, run.path("stability.csv"))
    run.figure(plot_eigenvalues, recs, "eigenvalues")
    run.figure(plot_lambda_families, recs, "lambda_apex", boundaries=bounds)
    found = [r for r in recs if r.exists]
    run.results.update(
        fixed_points=len(found),
        existence_boundaries_deg=[math.degrees(b) for b in bounds],
        max_lambda_apex_analytic=max((r.lambda_apex_aas for r in found), default=None),
        max_lambda_apex_numeric=max((r.lambda_apex_numeric for r in found), default=None),
    )
    b = ", ".join(f"{math.degrees(x):.2f}" for x in bounds) or "none"
    return f"{len(found)}/{len(recs)} angles with fixed points on the {kind} map; existence boundary at {b} deg"


def run_calibrate(run: Run) -> str:
    cfg = run.cfg
    target = math.radians(float(cfg["calibrate.boundary_deg"]))
    ya = np.linspace(float(cfg["grid.ya_min"]), float(cfg["grid.ya_max"]), int(cfg["calibrate.ya_count"]))
    w = calibrate_omega(
        run.params, target, ya, (float(cfg["calibrate.omega_lo"]), float(cfg["calibrate.omega_hi"])), run.integrator
    )
    with open(run.path("calibration.csv"), "w", newline="") as fh:
        csv.writer(fh).writerows((("boundary_deg", "omega"), (repr(float(cfg["calibrate.boundary_deg"])), repr(w))))
    run.results["omega"] = w
    return f"omega = {w:.6f} rad/s places the saturation boundary at {cfg['calibrate.boundary_deg']} deg"


RUNNERS = {
    "simulate": run_simulate,
    "predict": run_predict,
    "compare": run_compare,
    "grid": run_grid_cmd,
    "track": run_track,
    "stability": run_stability,
    "calibrate-omega": run_calibrate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        try:
            meta = json.loads(Path(args.metadata).read_text())
            name = meta["config"]["experiment.name"]
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            print(f"error: ConfigInvalid: cannot rerun from {args.metadata}: {exc}", file=sys.stderr)
            return 2
        argv2 = [name, "--config", args.metadata] + (["--out", args.out] if args.out else [])
        return main(argv2)

    try:
        cfg = resolve(args)
        run = Run(cfg)
    except SlipError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        line = RUNNERS[args.command](run)
    except SlipError as exc:
        run.results["elapsed_s"] = time.perf_counter() - t0
        run.write_metadata("error", f"{type(exc).__name__}: {exc}")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    run.results["elapsed_s"] = time.perf_counter() - t0
    run.write_metadata("ok")
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
