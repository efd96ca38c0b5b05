"""Static figures for the experiment outputs (Agg backend, PNG and optional SVG)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .control import TrackingResult  # noqa: E402
from .harness import GridResult, PairedTraces, paired_events  # noqa: E402
from .stability import StabilityRecord  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "svg.hashsalt": "slipscm",  # stable element ids across runs
}


def save(fig, stem, svg: bool = False) -> List[Path]:
    """Write ``stem.png`` (and ``stem.svg``); returns the paths written."""
    stem = Path(stem)
    out = [stem.with_suffix(".png")]
    if svg:
        out.append(stem.with_suffix(".svg"))
    for p in out:
        fig.savefig(p, dpi=150, bbox_inches="tight", metadata={"Date": None} if p.suffix == ".svg" else None)
    plt.close(fig)
    return out


def plot_paired(pair: PairedTraces, stem, svg: bool = False) -> List[Path]:
    """Single stride, numeric against analytic: height and velocity with event markers."""
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
        for tr, name, ls in ((pair.numeric, "numeric", "-"), (pair.analytic, "analytic", "--")):
            t = tr.column("t")
            ax1.plot(t, tr.column("y"), ls, label=name)
            ax2.plot(t, tr.column("ydot"), ls, label=name)
        for ev, tn, ta in paired_events(pair):
            for ax in (ax1, ax2):
                ax.axvline(tn, color="0.6", lw=0.6)
            ax1.annotate(ev, (tn, ax1.get_ylim()[1]), fontsize=7, rotation=90, va="top", ha="right")
        ax1.set_ylabel("y [m]")
        ax2.set_ylabel("ydot [m/s]")
        ax2.set_xlabel("t [s]")
        ax1.legend(loc="lower right")
        return save(fig, stem, svg)


def plot_projection(grid: GridResult, stem, svg: bool = False) -> List[Path]:
    """Prediction error against theta2: mean with one-std error bars."""
    proj = grid.projection()
    deg = np.degrees(proj[:, 0])
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
        ax1.errorbar(deg, proj[:, 1], yerr=proj[:, 2], fmt=".-", capsize=2, lw=0.8)
        ax2.errorbar(deg, proj[:, 3], yerr=proj[:, 4], fmt=".-", capsize=2, lw=0.8, color="C1")
        for ax in (ax1, ax2):
            if grid.theta_sat is not None:
                ax.axvline(math.degrees(grid.theta_sat), color="k", ls=":", lw=0.8, label="theta_sat")
            d = grid.discontinuity()
            if d is not None:
                ax.axvline(math.degrees(d), color="r", ls="--", lw=0.8, label="largest jump")
        ax1.set_ylabel("E_ap [%]")
        ax2.set_ylabel("E_lv [%]")
        ax2.set_xlabel("theta2 [deg]")
        ax1.legend(loc="upper right")
        return save(fig, stem, svg)


def plot_tracking(res: TrackingResult, stem, svg: bool = False) -> List[Path]:
    n = np.arange(len(res.reference))
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
        ax1.plot(n, res.reference, "k--", label="reference")
        ax1.plot(n, res.achieved, "o-", ms=3, label="achieved apex")
        ax1.set_ylabel("apex height [m]")
        ax1.legend(loc="upper right")
        ax2.step(n, np.degrees(res.controls), where="mid")
        sat = res.saturated.astype(bool)
        ax2.plot(n[sat], np.degrees(res.controls[sat]), "rx", ms=4, label="saturated")
        ax2.set_ylabel("theta2 [deg]")
        ax2.set_xlabel("stride")
        if sat.any():
            ax2.legend(loc="upper right")
        return save(fig, stem, svg)


def plot_eigenvalues(records: Sequence[StabilityRecord], stem, svg: bool = False) -> List[Path]:
    """Apex and control eigenvalues over theta2 on the sweep map."""
    r = [x for x in records if x.exists]
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
        deg = [math.degrees(x.theta2) for x in r]
        lam = [x.lambda_apex_aas if x.map == "analytic" else x.lambda_apex_numeric for x in r]
        ax1.plot(deg, lam, "o-", ms=3)
        ax1.axhline(1.0, color="k", ls=":", lw=0.8)
        ax1.set_ylabel("lambda_apex")
        ax2.plot(deg, [x.lambda_control for x in r], "o-", ms=3, label="per rad")
        ax2.plot(deg, [x.lambda_control_per_deg for x in r], "s-", ms=3, label="per deg")
        ax2.axhline(1.0, color="k", ls=":", lw=0.8)
        ax2.set_ylabel("lambda_control [m/unit]")
        ax2.set_xlabel("theta2 [deg]")
        ax2.legend(loc="upper left")
        if r:
            ax1.set_title(f"{r[0].map} map fixed points")
        return save(fig, stem, svg)


def plot_lambda_families(records: Sequence[StabilityRecord], stem, svg: bool = False,
                         boundaries: Optional[Sequence[float]] = None) -> List[Path]:
    """Analytic and numeric apex eigenvalues side by side."""
    r = [x for x in records if x.exists]
    deg = [math.degrees(x.theta2) for x in r]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(deg, [x.lambda_apex_aas for x in r], "o-", ms=3, label="analytic map")
        ax.plot(deg, [x.lambda_apex_numeric for x in r], "s--", ms=3, label="numeric map")
        ax.axhline(1.0, color="k", ls=":", lw=0.8)
        for b in boundaries or ():
            ax.axvline(math.degrees(b), color="r", ls="--", lw=0.8)
        ax.set_yscale("log")
        ax.set_xlabel("theta2 [deg]")
        ax.set_ylabel("lambda_apex")
        ax.legend()
        return save(fig, stem, svg)
