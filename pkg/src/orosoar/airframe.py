"""Glide polar and point-mass aerodynamic relations.

The glide polar maps horizontal airspeed to still-air sink rate (positive
down) as a cubic polynomial with a single interior minimum, the maximum
endurance speed. The point-mass relations close lift, a quadratic drag
polar, and the small-angle flight path angle, from which a polar can be
derived instead of invented. A cubic least-squares fit covers the
regression of logged gliding data.

Sign convention: sink rate s(v) > 0 in unpowered descent, so the vertical
kinematics read z_dot = wz - s(v).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InsufficientSamples,
    NoInteriorMinimum,
    NonPositiveAirspeed,
    OutOfPolarRange,
    SingularFit,
)


def _poly(coeffs: Sequence[float], v: float) -> float:
    c0, c1, c2, c3 = coeffs
    return c0 + v * (c1 + v * (c2 + v * c3))


def _dpoly(coeffs: Sequence[float], v: float) -> float:
    _, c1, c2, c3 = coeffs
    return c1 + v * (2.0 * c2 + v * 3.0 * c3)


def _interior_minima(coeffs, v_min, v_max):
    """Interior local minima of the cubic on (v_min, v_max).

    Critical points solve s'(v) = 3 c3 v^2 + 2 c2 v + c1 = 0, via the
    cancellation-free quadratic formula so a fitted c3 of ~1e-17 does not
    wreck the root that matters.
    """
    _, c1, c2, c3 = coeffs
    a, b, c = 3.0 * c3, 2.0 * c2, c1
    roots: list[float] = []
    if a != 0.0:
        disc = b * b - 4.0 * a * c
        if disc == 0.0:
            roots = [-b / (2.0 * a)]
        elif disc > 0.0:
            q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
            roots = [q / a]
            if q != 0.0:
                roots.append(c / q)
    elif b != 0.0:
        roots = [-c / b]
    minima = []
    for r in roots:
        if v_min < r < v_max and (2.0 * c2 + 6.0 * c3 * r) > 0.0:
            minima.append(r)
    return sorted(minima)


@dataclass(frozen=True)
class GlidePolar:
    """Cubic sink-rate curve s(v) = c0 + c1 v + c2 v^2 + c3 v^3.

    Valid on [v_min, v_max]; s must be positive there and have exactly one
    interior local minimum, which defines the maximum endurance speed.
    """

    coeffs: tuple[float, float, float, float]
    v_min: float
    v_max: float

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) != 4 or not all(math.isfinite(c) for c in coeffs):
            raise ValueError(f"need 4 finite coefficients, got {self.coeffs!r}")
        object.__setattr__(self, "coeffs", coeffs)
        if not (math.isfinite(self.v_min) and math.isfinite(self.v_max)):
            raise ValueError("polar range must be finite")
        if not self.v_min < self.v_max:
            raise ValueError(f"empty polar range [{self.v_min}, {self.v_max}]")
        minima = _interior_minima(coeffs, self.v_min, self.v_max)
        if len(minima) != 1:
            raise NoInteriorMinimum(
                f"sink curve has {len(minima)} interior minima on "
                f"[{self.v_min}, {self.v_max}], need exactly 1"
            )
        checkpoints = [self.v_min, self.v_max, minima[0]]
        if min(_poly(coeffs, v) for v in checkpoints) <= 0.0:
            raise ValueError("sink rate must be positive over the polar range")


def sink_rate(polar: GlidePolar, v: float) -> float:
    """Sink rate at airspeed v; OutOfPolarRange outside the valid range."""
    if not polar.v_min <= v <= polar.v_max:
        raise OutOfPolarRange(
            f"airspeed {v} outside polar range [{polar.v_min}, {polar.v_max}]",
            airspeed=v,
        )
    return _poly(polar.coeffs, v)


def sink_rate_slope(polar: GlidePolar, v: float) -> float:
    """ds/dv at airspeed v (same range contract as sink_rate)."""
    if not polar.v_min <= v <= polar.v_max:
        raise OutOfPolarRange(
            f"airspeed {v} outside polar range [{polar.v_min}, {polar.v_max}]",
            airspeed=v,
        )
    return _dpoly(polar.coeffs, v)


def v_me(polar: GlidePolar) -> float:
    """Maximum endurance speed: the unique interior sink minimum."""
    minima = _interior_minima(polar.coeffs, polar.v_min, polar.v_max)
    if len(minima) != 1:
        raise NoInteriorMinimum("polar lost its unique interior minimum")
    return minima[0]


@dataclass(frozen=True)
class AirframeParams:
    """Point-mass airframe constants and trim/plant parameters.

    m, S, rho, g and the drag-polynomial coefficients a0, a1, a2 feed the
    aerodynamic relations. theta0 is the trimmed pitch at the reference
    airspeed v_ref; k_v maps pitch offsets to trim-airspeed offsets
    (affine trim map, clamped to [v_min, v_max]). tau_v and tau_theta are
    the first-order airspeed and pitch response lags of the simulator
    plant. [v_min, v_max] is the validity range of the paired polar.
    """

    m: float
    S: float
    rho: float
    g: float
    a0: float
    a1: float
    a2: float
    theta0: float
    v_ref: float
    k_v: float
    tau_v: float
    tau_theta: float
    v_min: float
    v_max: float

    def __post_init__(self):
        for name in ("m", "S", "rho", "g", "k_v", "tau_v", "tau_theta"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {val}")
        if not self.v_min < self.v_max:
            raise ValueError(f"empty airspeed range [{self.v_min}, {self.v_max}]")
        if not self.v_min <= self.v_ref <= self.v_max:
            raise ValueError(
                f"v_ref={self.v_ref} outside range [{self.v_min}, {self.v_max}]"
            )


def default_airframe() -> AirframeParams:
    """Desk-scale airframe: ~1 kg span-limited glider class."""
    return AirframeParams(
        m=1.2, S=0.3, rho=1.225, g=9.81,
        a0=0.035, a1=-0.07, a2=0.06,
        theta0=0.08, v_ref=8.5, k_v=20.0, tau_v=0.5, tau_theta=0.3,
        v_min=5.0, v_max=14.0,
    )


def default_polar() -> GlidePolar:
    """Workbench default polar: quadratic sink curve, minimum 0.5 m/s at 9 m/s.

    s(v) = 0.5 + 0.1 (v - 9)^2 on [5, 14]. Steep enough that the slow and
    fast polar sides react in clearly opposite ways to wind-speed changes.
    """
    return GlidePolar(coeffs=(8.6, -1.8, 0.1, 0.0), v_min=5.0, v_max=14.0)


def lift_coefficient(p: AirframeParams, v_a: float) -> float:
    """C_L balancing weight at airspeed v_a: 2 m g / (rho v_a^2 S)."""
    if not v_a > 0.0:
        raise NonPositiveAirspeed(f"airspeed must be > 0, got {v_a}")
    return 2.0 * p.m * p.g / (p.rho * v_a * v_a * p.S)


def drag(p: AirframeParams, v_a: float) -> float:
    """Drag force from the quadratic polar in C_L, in newtons."""
    cl = lift_coefficient(p, v_a)
    q_dyn = 0.5 * p.rho * v_a * v_a * p.S
    return q_dyn * (p.a0 + p.a1 * cl + p.a2 * cl * cl)


def glide_angle(p: AirframeParams, v_a: float, thrust: float = 0.0) -> float:
    """Small-angle flight path angle gamma = (D - T) / (m g).

    Positive gamma means descending; thrust exactly canceling drag gives
    zero. thrust must be non-negative (all soaring runs use zero).
    """
    if thrust < 0.0:
        raise ValueError(f"thrust must be >= 0, got {thrust}")
    return (drag(p, v_a) - thrust) / (p.m * p.g)


def trim_airspeed(p: AirframeParams, theta: float) -> float:
    """Affine trim map v_trim(theta) = v_ref - k_v (theta - theta0).

    Pitching up slows the trim airspeed. Clamped to [v_min, v_max].
    """
    v = p.v_ref - p.k_v * (theta - p.theta0)
    return min(max(v, p.v_min), p.v_max)


def _lstsq_cubic(vs: np.ndarray, sinks: np.ndarray) -> tuple[np.ndarray, float]:
    design = np.column_stack([np.ones_like(vs), vs, vs**2, vs**3])
    coeffs, _, rank, _ = np.linalg.lstsq(design, sinks, rcond=None)
    if rank < 4:
        raise SingularFit(f"design matrix rank {rank} < 4")
    residual = sinks - design @ coeffs
    rms = float(np.sqrt(np.mean(residual**2)))
    return coeffs, rms


def fit_polar(
    samples: Iterable[tuple[float, float]],
    v_min: float,
    v_max: float,
) -> tuple[GlidePolar, float]:
    """Least-squares cubic polar from (airspeed, sink) samples.

    Needs at least 4 samples at 4 distinct airspeeds. Returns the polar
    and the fit residual RMS. Raises InsufficientSamples, SingularFit, or
    NoInteriorMinimum if the fitted curve is monotone on the range.
    """
    pts = [(float(v), float(s)) for v, s in samples]
    if len(pts) < 4:
        raise InsufficientSamples(f"need >= 4 samples, got {len(pts)}")
    if len({v for v, _ in pts}) < 4:
        raise InsufficientSamples("need >= 4 distinct airspeeds")
    vs = np.array([v for v, _ in pts])
    sinks = np.array([s for _, s in pts])
    coeffs, rms = _lstsq_cubic(vs, sinks)
    polar = GlidePolar(coeffs=tuple(coeffs), v_min=v_min, v_max=v_max)
    return polar, rms


def polar_from_point_mass(p: AirframeParams, n_samples: int = 64) -> GlidePolar:
    """Polar derived from the point-mass relations instead of invented.

    Samples s(v) = v * gamma(v) at zero thrust over [v_min, v_max] and
    fits the cubic. Raises NoInteriorMinimum when the drag polynomial
    yields a monotone sink curve on the range.
    """
    if n_samples < 8:
        raise InsufficientSamples(f"need >= 8 samples, got {n_samples}")
    vs = np.linspace(p.v_min, p.v_max, n_samples)
    sinks = np.array([v * glide_angle(p, v, 0.0) for v in vs])
    coeffs, _ = _lstsq_cubic(vs, sinks)
    return GlidePolar(coeffs=tuple(coeffs), v_min=p.v_min, v_max=p.v_max)
