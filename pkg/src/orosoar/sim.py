"""Deterministic fixed-step closed-loop soaring simulator.

The plant is longitudinal only and heads into the wind (the lateral laws
are assumed perfect), so ground motion reduces to x_dot = wx - v_a and
z_dot = wz - s(v_a) with the sink rate from the polar. Airspeed follows
the pitch-dependent trim speed through a first-order lag. Pitch itself is
driven either by a first-order lag toward the setpoint ("lag" plant) or
by an elevator-torque model behind the elevator PID ("cascade" plant).

Integration is classical fixed-step RK4; the controllers are sampled once
per step and held over the substeps. Identical scenarios produce
bit-identical logs. A polar-range escape (stall or overspeed) terminates
the run with a diagnostic instead of being clamped away: it is a finding.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Optional, Sequence, Union

from . import airframe as af
from . import analysis
from . import control as ctl
from .errors import (
    EmptyLog,
    InsideBody,
    InvalidScenario,
    OutOfBounds,
    OutOfPolarRange,
    PolarRangeExceeded,
)
from .windfield import (
    CylinderField,
    GridField,
    ScaledField,
    ScaleSchedule,
    WindField,
    load_grid,
    sample,
)

PLANT_LAG = "lag"
PLANT_CASCADE = "cascade"

# Event times must land on step boundaries within this tolerance.
EVENT_TIME_TOL = 1e-9

LOG_COLUMNS = (
    "t", "x", "z", "v_a", "theta", "theta_sp", "e_rho",
    "elevator", "wx", "wz", "lambda", "excess_updraft",
)


@dataclass(frozen=True)
class UavState:
    """Longitudinal simulation state; q is used by the cascade plant."""

    t: float
    x: float
    z: float
    v_a: float
    theta: float
    q: float = 0.0


@dataclass(frozen=True)
class LogRecord:
    """One telemetry row per step, captured at the step start.

    elevator is nan in lag mode; excess is nan where the local horizontal
    wind leaves the polar range (telemetry, not an error). lam is the
    wind scale factor in effect.
    """

    t: float
    x: float
    z: float
    v_a: float
    theta: float
    theta_sp: float
    e_rho: float
    elevator: float
    wx: float
    wz: float
    lam: float
    excess: float

    def row(self) -> tuple:
        return (self.t, self.x, self.z, self.v_a, self.theta, self.theta_sp,
                self.e_rho, self.elevator, self.wx, self.wz, self.lam, self.excess)


@dataclass(frozen=True)
class PlantParams:
    """Cascade-plant constants: pitch acceleration per unit elevator and
    pitch-rate damping. elevator_v2_scaling optionally scales elevator
    effectiveness with (v_a / v_ref)^2."""

    m_delta_e: float = 20.0
    m_q: float = 5.0
    elevator_v2_scaling: bool = False


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation run.

    tgl_schedule is a sequence of (t, Tgl) with non-decreasing times
    starting at 0; TGL and wind-scale events take effect exactly at step
    boundaries, so event times must be multiples of dt. domain bounds the
    analysis products (contour extraction, settle metrics); z_range, when
    given, overrides the altitude range used for equilibrium prediction.
    The rng seed is reserved and unused by default.
    """

    field_spec: WindField
    schedule: Optional[ScaleSchedule]
    airframe: af.AirframeParams
    polar: af.GlidePolar
    controller: ctl.SoaringControllerConfig
    tgl_schedule: tuple[tuple[float, analysis.Tgl], ...]
    domain: analysis.Domain
    plant_mode: str = PLANT_LAG
    integrator: str = "rk4"
    dt: float = 0.02
    duration: float = 60.0
    initial: UavState = field(default_factory=lambda: UavState(0.0, 0.0, 1.0, 8.5, 0.08))
    plant: PlantParams = field(default_factory=PlantParams)
    zeuc_cell: float = 0.05
    z_range: Optional[tuple[float, float]] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.plant_mode not in (PLANT_LAG, PLANT_CASCADE):
            raise InvalidScenario(f"unknown plant mode {self.plant_mode!r}")
        if self.integrator != "rk4":
            raise InvalidScenario(f"unsupported integrator {self.integrator!r}")
        if not self.dt > 0.0:
            raise InvalidScenario(f"dt must be > 0, got {self.dt}")
        if not self.duration > self.dt:
            raise InvalidScenario("duration must exceed dt")
        if not self.tgl_schedule:
            raise InvalidScenario("tgl_schedule must contain at least one entry")
        times = [t for t, _ in self.tgl_schedule]
        if times[0] != 0.0:
            raise InvalidScenario("first TGL must be scheduled at t=0")
        if any(b < a for a, b in zip(times, times[1:])):
            raise InvalidScenario("tgl_schedule times must be non-decreasing")
        for t in times:
            steps = t / self.dt
            if abs(steps - round(steps)) > EVENT_TIME_TOL / self.dt:
                raise InvalidScenario(
                    f"event time {t} is not a multiple of dt={self.dt}"
                )
        if self.initial.t != 0.0:
            raise InvalidScenario("initial state must start at t=0")
        if not self.polar.v_min <= self.initial.v_a <= self.polar.v_max:
            raise InvalidScenario(
                f"initial airspeed {self.initial.v_a} outside polar range"
            )

    def predict_z_range(self) -> tuple[float, float]:
        return self.z_range if self.z_range is not None else (
            self.domain.z_min, self.domain.z_max
        )


class SimEngine:
    """Stepwise simulation core shared by batch runs and the live server.

    Owns the mutable state between steps; every mutation (TGL moves, wind
    scale, gains, reset) happens between step_once calls, i.e. exactly at
    step boundaries.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        # Monotone count of executed steps; unlike step_index it survives
        # reset, giving replay an unambiguous time axis.
        self.total_steps = 0
        self.reset()

    def reset(self) -> None:
        sc = self.scenario
        self.state = sc.initial
        self.step_index = 0
        self.current_tgl = sc.tgl_schedule[0][1]
        self._next_event = 1
        self.controller = sc.controller
        self.pitch_pid = ctl.PidState()
        self.elevator_pid = ctl.PidState()
        self.wind_scale_override: Optional[float] = None

    # mutation hooks (used by the schedule and by the live service) ----

    def set_tgl(self, tgl: analysis.Tgl) -> None:
        self.current_tgl = tgl

    def set_wind_scale(self, lam: float) -> None:
        if not (math.isfinite(lam) and lam > 0.0):
            raise ValueError(f"wind scale must be finite and > 0, got {lam}")
        self.wind_scale_override = lam

    def set_controller(self, cfg: ctl.SoaringControllerConfig) -> None:
        self.controller = cfg

    # evaluation --------------------------------------------------------

    @property
    def t(self) -> float:
        return self.step_index * self.scenario.dt

    def wind_scale_at(self, t: float) -> float:
        if self.wind_scale_override is not None:
            return self.wind_scale_override
        if self.scenario.schedule is not None:
            return self.scenario.schedule.value(t)
        return 1.0

    def wind_at(self, x: float, z: float, t: float):
        base = sample(self.scenario.field_spec, None, x, z, t)
        lam = self.wind_scale_at(t)
        return lam * base.wx, lam * base.wz

    def _apply_due_tgl_events(self, t: float) -> None:
        schedule = self.scenario.tgl_schedule
        while self._next_event < len(schedule):
            event_t, tgl = schedule[self._next_event]
            if event_t <= t + EVENT_TIME_TOL:
                self.current_tgl = tgl
                self._next_event += 1
            else:
                break

    def _derivatives(self, t, x, z, v_a, theta, q, theta_sp, delta_e):
        sc = self.scenario
        wx, wz = self.wind_at(x, z, t)
        sink = af.sink_rate(sc.polar, v_a)
        v_trim = af.trim_airspeed(sc.airframe, theta)
        d_x = wx - v_a
        d_z = wz - sink
        d_v = (v_trim - v_a) / sc.airframe.tau_v
        if sc.plant_mode == PLANT_LAG:
            d_theta = (theta_sp - theta) / sc.airframe.tau_theta
            return d_x, d_z, d_v, d_theta, 0.0
        effectiveness = sc.plant.m_delta_e
        if sc.plant.elevator_v2_scaling:
            effectiveness *= (v_a / sc.airframe.v_ref) ** 2
        return d_x, d_z, d_v, q, effectiveness * delta_e - sc.plant.m_q * q

    def step_once(self) -> LogRecord:
        """Advance one step; returns the record for the step start."""
        sc = self.scenario
        dt = sc.dt
        t0 = self.t
        self._apply_due_tgl_events(t0)
        s0 = self.state

        # Controllers sampled once per step, held over the RK4 substeps.
        e_rho = ctl.signed_distance(self.current_tgl, s0.x, s0.z)
        theta_sp, self.pitch_pid = ctl.pitch_setpoint(
            self.controller, self.pitch_pid, e_rho, dt)
        if sc.plant_mode == PLANT_CASCADE:
            delta_e, self.elevator_pid = ctl.elevator_setpoint(
                self.controller, self.elevator_pid, theta_sp - s0.theta, dt)
        else:
            delta_e = math.nan

        wx0, wz0 = self.wind_at(s0.x, s0.z, t0)
        try:
            excess = wz0 - af.sink_rate(sc.polar, wx0)
        except OutOfPolarRange:
            excess = math.nan
        record = LogRecord(
            t=t0, x=s0.x, z=s0.z, v_a=s0.v_a, theta=s0.theta,
            theta_sp=theta_sp, e_rho=e_rho, elevator=delta_e,
            wx=wx0, wz=wz0, lam=self.wind_scale_at(t0), excess=excess,
        )

        y0 = (s0.x, s0.z, s0.v_a, s0.theta, s0.q)

        def rhs(t, y):
            return self._derivatives(t, *y, theta_sp=theta_sp, delta_e=delta_e)

        try:
            k1 = rhs(t0, y0)
            y_k2 = tuple(y + 0.5 * dt * k for y, k in zip(y0, k1))
            k2 = rhs(t0 + 0.5 * dt, y_k2)
            y_k3 = tuple(y + 0.5 * dt * k for y, k in zip(y0, k2))
            k3 = rhs(t0 + 0.5 * dt, y_k3)
            y_k4 = tuple(y + dt * k for y, k in zip(y0, k3))
            k4 = rhs(t0 + dt, y_k4)
        except OutOfPolarRange as exc:
            raise PolarRangeExceeded(
                f"airspeed left the polar range during step at t={t0:.6g}: {exc}",
                state=s0,
            ) from exc
        y1 = tuple(
            y + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            for y, a, b, c, d in zip(y0, k1, k2, k3, k4)
        )

        self.step_index += 1
        self.total_steps += 1
        new_state = UavState(self.t, *y1)
        if not sc.polar.v_min <= new_state.v_a <= sc.polar.v_max:
            self.state = new_state
            raise PolarRangeExceeded(
                f"airspeed {new_state.v_a:.4g} outside polar range "
                f"[{sc.polar.v_min}, {sc.polar.v_max}] at t={new_state.t:.6g}",
                state=new_state,
            )
        self.state = new_state
        return record


@dataclass(frozen=True)
class RunResult:
    """Run output: one record per step, the final state, and a diagnostic
    message when the run terminated early."""

    records: tuple[LogRecord, ...]
    final_state: UavState
    diagnostic: Optional[str] = None

    @property
    def terminated(self) -> bool:
        return self.diagnostic is not None


def run(scenario: Scenario) -> RunResult:
    """Run the scenario to completion (or early termination).

    Deterministic: the same scenario produces a bit-identical log. A
    polar-range escape (stall/overspeed) or a wind-field escape (into the
    body, off the grid) terminates early and returns the partial log plus
    the diagnostic.
    """
    engine = SimEngine(scenario)
    n_steps = int(round(scenario.duration / scenario.dt))
    records: list[LogRecord] = []
    for _ in range(n_steps):
        try:
            records.append(engine.step_once())
        except (PolarRangeExceeded, InsideBody, OutOfBounds) as exc:
            return RunResult(tuple(records), engine.state, diagnostic=str(exc))
    return RunResult(tuple(records), engine.state)


@dataclass(frozen=True)
class Convergence:
    """Settling metrics against a predicted equilibrium.

    settled means the last 20% of samples stayed within the band;
    settle_time is when the trajectory last entered the band for good
    (inf if it never stayed in).
    """

    settled: bool
    settle_time: float
    final_offset: float
    rms_e_rho: float


def measure_convergence(
    records: Sequence[LogRecord],
    tgl: analysis.Tgl,
    predicted: analysis.Equilibrium,
    settle_band: float,
) -> Convergence:
    """Quantify how well a log settled onto the predicted equilibrium."""
    if not records:
        raise EmptyLog("cannot measure convergence of an empty log")
    px, pz = predicted.position
    dists = [math.hypot(r.x - px, r.z - pz) for r in records]
    tail_start = math.floor(0.8 * len(records))
    tail = records[tail_start:]
    settled = all(d <= settle_band for d in dists[tail_start:])
    settle_idx = 0
    for i in range(len(dists) - 1, -1, -1):
        if dists[i] > settle_band:
            settle_idx = i + 1
            break
    settle_time = records[settle_idx].t if settle_idx < len(records) else math.inf
    rms = math.sqrt(
        sum(ctl.signed_distance(tgl, r.x, r.z) ** 2 for r in tail) / len(tail)
    )
    return Convergence(
        settled=settled,
        settle_time=settle_time,
        final_offset=dists[-1],
        rms_e_rho=rms,
    )


def write_log_csv(records: Sequence[LogRecord], dest: Union[str, Path, IO[str]]) -> None:
    """Write the log as CSV with the declared column order."""
    def _write(f):
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        for r in records:
            writer.writerow([repr(v) for v in r.row()])

    if hasattr(dest, "write"):
        _write(dest)
    else:
        with open(dest, "w", newline="") as f:
            _write(f)


# scenario (de)serialization --------------------------------------------

def _tgl_from_json(obj: dict) -> analysis.Tgl:
    if "a" in obj:
        return analysis.tgl_from_coefficients(obj["a"], obj["b"], obj["c"])
    origin = tuple(obj["origin"])
    return analysis.make_tgl(origin, obj["angle_from_vertical"])


def _tgl_to_json(tgl: analysis.Tgl) -> dict:
    return {"a": tgl.a, "b": tgl.b, "c": tgl.c}


def _gains_from_json(obj: dict) -> ctl.PidGains:
    return ctl.PidGains(
        kp=obj["kp"], ki=obj.get("ki", 0.0), kd=obj.get("kd", 0.0),
        integrator_limit=obj.get("integrator_limit", math.inf),
        output_limit=obj.get("output_limit", math.inf),
        derivative_filter_tau=obj.get("derivative_filter_tau", 0.0),
    )


def _gains_to_json(g: ctl.PidGains) -> dict:
    return {
        "kp": g.kp, "ki": g.ki, "kd": g.kd,
        "integrator_limit": g.integrator_limit,
        "output_limit": g.output_limit,
        "derivative_filter_tau": g.derivative_filter_tau,
    }


def _field_from_json(obj: dict, base_dir: Optional[Path]) -> WindField:
    kind = obj.get("type")
    if kind == "cylinder":
        return CylinderField(
            freestream=obj["freestream"],
            radius=obj["radius"],
            center=tuple(obj.get("center", (0.0, 0.0))),
        )
    if kind == "grid":
        path = Path(obj["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        with open(path, newline="") as f:
            return load_grid(f)
    raise InvalidScenario(f"unknown field type {kind!r}")


def _field_to_json(field_spec: WindField) -> dict:
    if isinstance(field_spec, CylinderField):
        return {
            "type": "cylinder",
            "freestream": field_spec.freestream,
            "radius": field_spec.radius,
            "center": list(field_spec.center),
        }
    if isinstance(field_spec, GridField):
        return {
            "type": "grid",
            "x_range": [float(field_spec.x_coords[0]), float(field_spec.x_coords[-1])],
            "z_range": [float(field_spec.z_coords[0]), float(field_spec.z_coords[-1])],
        }
    if isinstance(field_spec, ScaledField):
        return {
            "type": "scaled",
            "base": _field_to_json(field_spec.base),
            "schedule": [list(bp) for bp in field_spec.schedule.breakpoints],
        }
    raise TypeError(f"not a wind field: {type(field_spec).__name__}")


def scenario_from_json(
    source: Union[str, Path, dict], base_dir: Optional[Path] = None
) -> Scenario:
    """Build a Scenario from a JSON file path or an already-parsed dict.

    Relative grid-field paths resolve against the scenario file's
    directory.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        base_dir = path.parent
        with open(path) as f:
            obj = json.load(f)
    else:
        obj = source

    try:
        field_spec = _field_from_json(obj["field"], base_dir)
        schedule = (
            ScaleSchedule(tuple(tuple(bp) for bp in obj["scale_schedule"]))
            if obj.get("scale_schedule") else None
        )
        airframe = af.AirframeParams(**obj["airframe"])
        polar_obj = obj["polar"]
        if "coeffs" in polar_obj:
            polar = af.GlidePolar(
                coeffs=tuple(polar_obj["coeffs"]),
                v_min=polar_obj["v_min"], v_max=polar_obj["v_max"],
            )
        else:
            polar = af.polar_from_point_mass(
                airframe, polar_obj.get("from_point_mass", 64))
        controller_obj = obj["controller"]
        controller = ctl.SoaringControllerConfig(
            theta0=controller_obj["theta0"],
            pitch_gains=_gains_from_json(controller_obj["pitch_gains"]),
            elevator_gains=_gains_from_json(controller_obj["elevator_gains"]),
            pitch_setpoint_limits=tuple(controller_obj["pitch_setpoint_limits"]),
        )
        tgl_schedule = tuple(
            (entry["t"], _tgl_from_json(entry)) for entry in obj["tgl_schedule"]
        )
        domain = analysis.Domain(**obj["domain"])
        plant = PlantParams(**obj.get("plant", {}))
        initial_obj = obj["initial"]
        initial = UavState(
            t=0.0, x=initial_obj["x"], z=initial_obj["z"],
            v_a=initial_obj["v_a"], theta=initial_obj["theta"],
            q=initial_obj.get("q", 0.0),
        )
        return Scenario(
            field_spec=field_spec,
            schedule=schedule,
            airframe=airframe,
            polar=polar,
            controller=controller,
            tgl_schedule=tgl_schedule,
            domain=domain,
            plant_mode=obj.get("plant_mode", PLANT_LAG),
            integrator=obj.get("integrator", "rk4"),
            dt=obj.get("dt", 0.02),
            duration=obj.get("duration", 60.0),
            initial=initial,
            plant=plant,
            zeuc_cell=obj.get("zeuc_cell", 0.05),
            z_range=tuple(obj["z_range"]) if obj.get("z_range") else None,
            seed=obj.get("seed"),
        )
    except KeyError as exc:
        raise InvalidScenario(f"scenario is missing field {exc}") from exc


def scenario_to_json(sc: Scenario) -> dict:
    """JSON-ready mapping of the scenario (grid fields are summarized)."""
    out = {
        "field": _field_to_json(sc.field_spec),
        "scale_schedule": (
            [list(bp) for bp in sc.schedule.breakpoints] if sc.schedule else None
        ),
        "airframe": {
            "m": sc.airframe.m, "S": sc.airframe.S, "rho": sc.airframe.rho,
            "g": sc.airframe.g, "a0": sc.airframe.a0, "a1": sc.airframe.a1,
            "a2": sc.airframe.a2, "theta0": sc.airframe.theta0,
            "v_ref": sc.airframe.v_ref, "k_v": sc.airframe.k_v,
            "tau_v": sc.airframe.tau_v, "tau_theta": sc.airframe.tau_theta,
            "v_min": sc.airframe.v_min, "v_max": sc.airframe.v_max,
        },
        "polar": {
            "coeffs": list(sc.polar.coeffs),
            "v_min": sc.polar.v_min, "v_max": sc.polar.v_max,
        },
        "controller": {
            "theta0": sc.controller.theta0,
            "pitch_gains": _gains_to_json(sc.controller.pitch_gains),
            "elevator_gains": _gains_to_json(sc.controller.elevator_gains),
            "pitch_setpoint_limits": list(sc.controller.pitch_setpoint_limits),
        },
        "tgl_schedule": [
            {"t": t, **_tgl_to_json(tgl)} for t, tgl in sc.tgl_schedule
        ],
        "domain": {
            "x_min": sc.domain.x_min, "x_max": sc.domain.x_max,
            "z_min": sc.domain.z_min, "z_max": sc.domain.z_max,
        },
        "plant_mode": sc.plant_mode,
        "integrator": sc.integrator,
        "dt": sc.dt,
        "duration": sc.duration,
        "initial": {
            "x": sc.initial.x, "z": sc.initial.z, "v_a": sc.initial.v_a,
            "theta": sc.initial.theta, "q": sc.initial.q,
        },
        "plant": {
            "m_delta_e": sc.plant.m_delta_e, "m_q": sc.plant.m_q,
            "elevator_v2_scaling": sc.plant.elevator_v2_scaling,
        },
        "zeuc_cell": sc.zeuc_cell,
        "z_range": list(sc.z_range) if sc.z_range else None,
        "seed": sc.seed,
    }
    return out
