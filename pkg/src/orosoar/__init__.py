"""orosoar: a desk-scale workbench for autonomous orographic soaring.

Models an updraft wind field (analytic cylinder flow or imported grid),
maps a glide polar onto it to find where unpowered soaring is feasible,
closes the loop with a target-gradient-line pitch controller in a
deterministic simulator, and serves a live session an operator can steer
by moving the line.
"""

from . import errors
from .airframe import (
    AirframeParams,
    GlidePolar,
    default_airframe,
    default_polar,
    drag,
    fit_polar,
    glide_angle,
    lift_coefficient,
    polar_from_point_mass,
    sink_rate,
    sink_rate_slope,
    trim_airspeed,
    v_me,
)
from .analysis import (
    Domain,
    Equilibrium,
    Tgl,
    ZeucContour,
    equilibrium_stability,
    excess_updraft,
    extract_zeuc,
    make_tgl,
    predict_equilibrium,
    rotate_tgl,
    scaling_sensitivity,
    tgl_from_coefficients,
    tgl_zeuc_angle,
    translate_tgl,
)
from .control import (
    PidGains,
    PidState,
    SoaringControllerConfig,
    default_controller_config,
    elevator_setpoint,
    pid_step,
    pitch_setpoint,
    roll_setpoint,
    signed_distance,
    yaw_error,
    yaw_setpoint,
)
from .sim import (
    Convergence,
    LogRecord,
    PlantParams,
    RunResult,
    Scenario,
    SimEngine,
    UavState,
    measure_convergence,
    run,
    scenario_from_json,
    scenario_to_json,
    write_log_csv,
)
from .windfield import (
    CylinderField,
    GridField,
    ScaledField,
    ScaleSchedule,
    WindVector,
    load_grid,
    sample,
    sample_cylinder,
    sample_grid,
)

__version__ = "0.1.0"
