"""Vertical spring-mass hopper with a slider-crank actuated leg.

Numeric hybrid simulator, closed-form approximate stride map, deadbeat apex
control, return-map stability analysis and the experiment harness around them.
"""

from .analytic import EXACT, NEWTON, apex_return_hat, predict_stride
from .control import DeadbeatConfig, TrackingAborted, deadbeat_theta, sine_reference, track
from .core import (
    INSTANT,
    TABLE2,
    ApexState,
    ControlInput,
    HybridState,
    ModelParams,
    Phase,
    SlipError,
    StrideRecord,
    validate,
)
from .harness import CALIBRATED_OMEGA, GridSpec, calibrate_omega, prediction_errors, run_grid, single_stride_trace
from .kinematics import crank_angle_at, crank_schedule, leg_offset, rod_angle
from .simulator import HARNESS, ORACLE, IntegratorConfig, Trace, apex_return, simulate, stride_trace
from .stability import ANALYTIC, NUMERIC, existence_boundaries, find_fixed_point, stability_sweep

__version__ = "0.1.0"
