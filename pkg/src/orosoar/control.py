"""Soaring control laws as pure, deterministic functions.

The longitudinal loop is a cascade: the perpendicular distance to the
target gradient line feeds a PID that offsets the pitch setpoint from
trim, and (in the cascade plant) a second PID turns pitch error into
elevator deflection. The lateral roll and yaw laws are included as pure
functions; the simulator assumes they hold perfectly.

All controllers are state-in/state-out with no shared mutable state, so
any number of instances can run concurrently. The discrete realization
uses trapezoidal integration, a first-order-filtered derivative (zero on
the first step), a direct clamp on the stored integral, and conditional
anti-windup that freezes the integral while the output is saturated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .analysis import Tgl
from .errors import NonPositiveDt, NonPositiveR


@dataclass(frozen=True)
class PidGains:
    """PID gains plus realization limits.

    integrator_limit clamps the stored integral, output_limit the
    controller output; derivative_filter_tau is the derivative low-pass
    time constant (0 disables filtering).
    """

    kp: float
    ki: float
    kd: float
    integrator_limit: float = math.inf
    output_limit: float = math.inf
    derivative_filter_tau: float = 0.0

    def __post_init__(self):
        if not self.integrator_limit > 0.0:
            raise ValueError(f"integrator_limit must be > 0, got {self.integrator_limit}")
        if not self.output_limit > 0.0:
            raise ValueError(f"output_limit must be > 0, got {self.output_limit}")
        if self.derivative_filter_tau < 0.0:
            raise ValueError(f"derivative_filter_tau must be >= 0, got {self.derivative_filter_tau}")


@dataclass(frozen=True)
class PidState:
    """Discrete controller memory: integral, previous error, filtered
    derivative, and whether a first step has been taken."""

    integral: float = 0.0
    prev_error: float = 0.0
    deriv: float = 0.0
    initialized: bool = False


def _clamp(value: float, limit: float) -> float:
    return min(max(value, -limit), limit)


def pid_step(
    gains: PidGains, state: PidState, error: float, dt: float
) -> tuple[float, PidState]:
    """One discrete PID update; returns (output, next state).

    The derivative is zero on the first step. With ki or kd zero the
    corresponding state is left untouched, so a pure P controller only
    advances prev_error.
    """
    if not dt > 0.0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    prev_error = state.prev_error if state.initialized else error

    integral = state.integral
    if gains.ki != 0.0:
        integral = _clamp(
            integral + 0.5 * dt * (error + prev_error), gains.integrator_limit
        )

    deriv = state.deriv
    if gains.kd != 0.0:
        raw = (error - prev_error) / dt if state.initialized else 0.0
        tau = gains.derivative_filter_tau
        deriv = raw if tau == 0.0 else deriv + (dt / (tau + dt)) * (raw - deriv)

    unsaturated = gains.kp * error + gains.ki * integral + gains.kd * deriv
    if abs(unsaturated) > gains.output_limit:
        # Saturated: freeze the integral at its previous value.
        integral = _clamp(state.integral, gains.integrator_limit)
        output = _clamp(
            gains.kp * error + gains.ki * integral + gains.kd * deriv,
            gains.output_limit,
        )
    else:
        output = unsaturated
    return output, PidState(integral, error, deriv, True)


@dataclass(frozen=True)
class SoaringControllerConfig:
    """Gain sets and trim for the longitudinal soaring cascade.

    theta0 is the trimmed pitch at the expected flight speed; the pitch
    setpoint is clamped to pitch_setpoint_limits, which must bracket it.
    """

    theta0: float
    pitch_gains: PidGains
    elevator_gains: PidGains
    pitch_setpoint_limits: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.pitch_setpoint_limits
        if not lo < self.theta0 < hi:
            raise ValueError(
                f"pitch setpoint limits ({lo}, {hi}) must bracket theta0={self.theta0}"
            )


def default_controller_config(theta0: float = 0.08) -> SoaringControllerConfig:
    """Workbench default gains (tuned on the cylinder scenarios).

    The elevator loop is deliberately stiff (inner-loop bandwidth well
    above the pitch loop's crossover) so the cascade plant tracks the
    pitch setpoint about as tightly as the first-order-lag plant does.
    """
    return SoaringControllerConfig(
        theta0=theta0,
        pitch_gains=PidGains(
            kp=0.08, ki=0.03, kd=0.35,
            integrator_limit=60.0, output_limit=0.35,
            derivative_filter_tau=0.1,
        ),
        elevator_gains=PidGains(
            kp=6.0, ki=1.0, kd=0.5,
            integrator_limit=2.0, output_limit=1.0,
            derivative_filter_tau=0.0,
        ),
        pitch_setpoint_limits=(theta0 - 0.35, theta0 + 0.35),
    )


def signed_distance(tgl: Tgl, x: float, z: float) -> float:
    """Perpendicular distance to the line, positive upstream.

    With the normalized line (unit normal pointing downstream) this is
    simply -(a x + b z + c).
    """
    return -(tgl.a * x + tgl.b * z + tgl.c)


def pitch_setpoint(
    cfg: SoaringControllerConfig, state: PidState, e_rho: float, dt: float
) -> tuple[float, PidState]:
    """Pitch setpoint from the line-distance error: theta0 + PID(e_rho).

    Positive upstream error pitches up, slowing the trim airspeed so the
    aircraft drifts downstream back toward the line. Clamped to the
    configured setpoint limits.
    """
    offset, next_state = pid_step(cfg.pitch_gains, state, e_rho, dt)
    lo, hi = cfg.pitch_setpoint_limits
    return min(max(cfg.theta0 + offset, lo), hi), next_state


def elevator_setpoint(
    cfg: SoaringControllerConfig, state: PidState, theta_e: float, dt: float
) -> tuple[float, PidState]:
    """Normalized elevator deflection in [-1, 1] from the pitch error."""
    out, next_state = pid_step(cfg.elevator_gains, state, theta_e, dt)
    return min(max(out, -1.0), 1.0), next_state


def roll_setpoint(
    gains: PidGains, state: PidState, e_phi: float, dt: float
) -> tuple[float, PidState]:
    """Aileron command holding wings level: full PID on the roll error."""
    return pid_step(gains, state, e_phi, dt)


def yaw_error(y: float, waypoint_distance: float, psi: float) -> float:
    """Heading error toward a virtual upwind waypoint.

    y is the lateral displacement from the center plane, waypoint_distance
    the upwind distance to the waypoint (must be > 0). The error is
    atan2(y, distance) - psi.
    """
    if not waypoint_distance > 0.0:
        raise NonPositiveR(f"waypoint distance must be > 0, got {waypoint_distance}")
    return math.atan2(y, waypoint_distance) - psi


def yaw_setpoint(
    gains: PidGains, state: PidState, e_psi: float, dt: float
) -> tuple[float, PidState]:
    """Rudder command from the yaw error: PD only, any ki is ignored."""
    return pid_step(replace(gains, ki=0.0), state, e_psi, dt)
