"""Live simulation server.

Runs one simulation in (scaled) real time and speaks JSON over a
websocket: state snapshots stream server to client at a fixed cadence of
simulated time, operator commands flow client to server, and every
command is acknowledged with the simulated time at which it took effect,
always a step boundary. A static info endpoint describes the scenario.

Message envelope, both directions: {"type": str, "seq": int,
"payload": object}. Types server to client: "snapshot", "ack",
"rejection". Client to server: "command" with payload {"kind": ...}.
Command kinds: set_tgl, translate_tgl, rotate_tgl, set_wind_scale,
pause, resume, reset, set_gains, set_time_scale.

One task owns the simulation loop exclusively; websocket sessions only
exchange messages with it. Slow consumers lose superseded snapshots
(latest wins) but never acks or rejections. The applied-command trace is
recorded with step indices, so replay_trace can reproduce the streamed
trajectory offline, exactly.
"""

from __future__ import annotations

import asyncio
import collections
import errno
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from aiohttp import WSMsgType, web

from . import analysis
from . import control as ctl
from .errors import OrosoarError, PortInUse
from .sim import Scenario, SimEngine, scenario_to_json
from .windfield import ScaledField, ScaleSchedule

SCHEMA_VERSION = 1

# Snapshot cadence in simulated seconds.
DEFAULT_SNAPSHOT_PERIOD = 0.05

# Resolution of the excess-updraft grid shipped with contour updates.
HEATMAP_NODES = 60

ENGINE_COMMANDS = frozenset(
    {"set_tgl", "translate_tgl", "rotate_tgl", "set_wind_scale",
     "set_gains", "reset"}
)
SERVICE_COMMANDS = frozenset({"pause", "resume", "set_time_scale"})


@dataclass(frozen=True)
class AppliedCommand:
    """Trace entry: the command and the executed-step count it landed on.

    The count is the engine's monotone total_steps, which survives
    resets, so a trace orders unambiguously even when the simulated clock
    restarts.
    """

    step: int
    kind: str
    payload: dict


def apply_engine_command(engine: SimEngine, kind: str, payload: dict) -> None:
    """Apply an engine-affecting command; raises on invalid payloads.

    Shared by the live loop and offline replay so both take the exact
    same code path.
    """
    if kind == "set_tgl":
        if "a" in payload:
            tgl = analysis.tgl_from_coefficients(
                payload["a"], payload["b"], payload["c"])
        else:
            tgl = analysis.make_tgl(
                tuple(payload["origin"]), payload["angle_from_vertical"])
        engine.set_tgl(tgl)
    elif kind == "translate_tgl":
        engine.set_tgl(analysis.translate_tgl(
            engine.current_tgl, (payload["dx"], payload.get("dz", 0.0))))
    elif kind == "rotate_tgl":
        engine.set_tgl(analysis.rotate_tgl(
            engine.current_tgl, tuple(payload["pivot"]), payload["dangle"]))
    elif kind == "set_wind_scale":
        engine.set_wind_scale(payload["scale"])
    elif kind == "set_gains":
        cfg = engine.controller
        pitch = _gains_update(cfg.pitch_gains, payload.get("pitch"))
        elevator = _gains_update(cfg.elevator_gains, payload.get("elevator"))
        engine.set_controller(replace(
            cfg, pitch_gains=pitch, elevator_gains=elevator))
    elif kind == "reset":
        engine.reset()
    else:
        raise ValueError(f"unknown engine command {kind!r}")


def _gains_update(gains: ctl.PidGains, patch: Optional[dict]) -> ctl.PidGains:
    if not patch:
        return gains
    allowed = {"kp", "ki", "kd", "integrator_limit", "output_limit",
               "derivative_filter_tau"}
    unknown = set(patch) - allowed
    if unknown:
        raise ValueError(f"unknown gain fields {sorted(unknown)}")
    return replace(gains, **patch)


def replay_trace(
    scenario: Scenario, trace: list[AppliedCommand], n_steps: int
):
    """Re-run the scenario applying the trace at its recorded boundaries.

    Returns a list of states indexed by executed-step count (entry 0 is
    the initial state). Pause and time-scale entries do not influence the
    trajectory; they are ignored. The trace is applied in order, exactly
    as the live loop applied it.
    """
    engine = SimEngine(scenario)
    pending = collections.deque(
        cmd for cmd in trace if cmd.kind in ENGINE_COMMANDS
    )
    states = [engine.state]
    for step in range(n_steps):
        while pending and pending[0].step <= step:
            cmd = pending.popleft()
            apply_engine_command(engine, cmd.kind, cmd.payload)
        engine.step_once()
        states.append(engine.state)
    return states


class _Outbox:
    """Per-session outbound channel: acks queue, snapshots latest-wins."""

    def __init__(self):
        self._acks: collections.deque = collections.deque()
        self._snapshot: Optional[dict] = None
        self._event = asyncio.Event()

    def push_ack(self, message: dict) -> None:
        self._acks.append(message)
        self._event.set()

    def push_snapshot(self, message: dict) -> None:
        self._snapshot = message
        self._event.set()

    async def next(self) -> dict:
        while True:
            if self._acks:
                return self._acks.popleft()
            if self._snapshot is not None:
                msg, self._snapshot = self._snapshot, None
                return msg
            self._event.clear()
            await self._event.wait()


class _Session:
    def __init__(self, ws: web.WebSocketResponse):
        self.ws = ws
        self.outbox = _Outbox()
        self.last_zeuc_revision: Optional[int] = None


class SoaringService:
    """Owns the engine, the loop task, and the connected sessions."""

    def __init__(
        self,
        scenario: Scenario,
        *,
        time_scale: float = 1.0,
        snapshot_period: float = DEFAULT_SNAPSHOT_PERIOD,
    ):
        self.scenario = scenario
        self.engine = SimEngine(scenario)
        self.time_scale = time_scale
        self.snapshot_period = snapshot_period
        self.paused = False
        self.diagnostic: Optional[str] = None
        self.zeuc_revision = 0
        self.trace: list[AppliedCommand] = []
        self.sessions: set[_Session] = set()
        self.commands: asyncio.Queue = asyncio.Queue()
        self._out_seq = 0
        self._analysis_cache: dict = {}
        self._loop_task: Optional[asyncio.Task] = None

    # analysis products --------------------------------------------------

    def _scaled_field(self):
        lam = self.engine.wind_scale_at(self.engine.t)
        return ScaledField(
            self.scenario.field_spec, ScaleSchedule(((0.0, lam),)))

    def _zeuc_payload(self) -> dict:
        key = ("zeuc", self.zeuc_revision)
        if key not in self._analysis_cache:
            sc = self.scenario
            contour = analysis.extract_zeuc(
                self._scaled_field(), None, sc.polar, sc.domain, sc.zeuc_cell, 0.0)
            self._analysis_cache = {
                k: v for k, v in self._analysis_cache.items() if k[0] != "zeuc"}
            self._analysis_cache[key] = {
                "polylines": [[[x, z] for x, z in poly]
                              for poly in contour.polylines],
                "cell": contour.cell,
                "excess_grid": self._heatmap(),
            }
        return self._analysis_cache[key]

    def _heatmap(self) -> dict:
        sc = self.scenario
        field = self._scaled_field()
        xs = [sc.domain.x_min + (sc.domain.x_max - sc.domain.x_min) * i / (HEATMAP_NODES - 1)
              for i in range(HEATMAP_NODES)]
        zs = [sc.domain.z_min + (sc.domain.z_max - sc.domain.z_min) * j / (HEATMAP_NODES - 1)
              for j in range(HEATMAP_NODES)]
        values = []
        for j in range(HEATMAP_NODES):
            row = []
            for i in range(HEATMAP_NODES):
                try:
                    row.append(analysis.excess_updraft(
                        field, None, sc.polar, xs[i], zs[j], 0.0))
                except OrosoarError:
                    row.append(None)
            values.append(row)
        return {"xs": xs, "zs": zs, "values": values}

    def _equilibrium(self) -> Optional[dict]:
        key = ("equilibrium", self.zeuc_revision, self.engine.current_tgl)
        if key not in self._analysis_cache:
            sc = self.scenario
            try:
                z_range = analysis.clipped_z_range(
                    self.engine.current_tgl, self._scaled_field(), None,
                    sc.polar, sc.predict_z_range(), 0.0)
                eq = analysis.predict_equilibrium(
                    self.engine.current_tgl, self._scaled_field(), None,
                    sc.polar, z_range, 0.0)
                value = {"x": eq.position[0], "z": eq.position[1],
                         "stability": eq.stability}
            except OrosoarError:
                value = None
            self._analysis_cache = {
                k: v for k, v in self._analysis_cache.items()
                if k[0] != "equilibrium"}
            self._analysis_cache[key] = value
        return self._analysis_cache[key]

    # snapshots -----------------------------------------------------------

    def snapshot_of(self) -> dict:
        """Pure projection of the current engine state."""
        engine = self.engine
        state = engine.state
        tgl = engine.current_tgl
        e_rho = ctl.signed_distance(tgl, state.x, state.z)
        theta_sp, _ = ctl.pitch_setpoint(
            engine.controller, engine.pitch_pid, e_rho, self.scenario.dt)
        return {
            "t": state.t,
            "step": engine.total_steps,
            "x": state.x,
            "z": state.z,
            "v_a": state.v_a,
            "theta": state.theta,
            "q": state.q,
            "tgl": {"a": tgl.a, "b": tgl.b, "c": tgl.c},
            "e_rho": e_rho,
            "lambda": engine.wind_scale_at(engine.t),
            "theta_sp": theta_sp,
            "equilibrium": self._equilibrium(),
            "zeuc_revision": self.zeuc_revision,
            "paused": self.paused,
            "diagnostic": self.diagnostic,
        }

    def _broadcast_snapshot(self) -> None:
        base = self.snapshot_of()
        for session in self.sessions:
            payload = dict(base)
            if session.last_zeuc_revision != self.zeuc_revision:
                payload["zeuc"] = self._zeuc_payload()
                session.last_zeuc_revision = self.zeuc_revision
            self._out_seq += 1
            session.outbox.push_snapshot(
                {"type": "snapshot", "seq": self._out_seq, "payload": payload})

    # command handling ------------------------------------------------------

    def _handle_command(self, session: _Session, client_seq, payload) -> None:
        kind = payload.get("kind")
        try:
            if kind in ENGINE_COMMANDS:
                # a reset changes the effective field only when it clears
                # a wind-scale override
                field_changes = kind == "set_wind_scale" or (
                    kind == "reset"
                    and self.engine.wind_scale_override is not None)
                apply_engine_command(self.engine, kind, payload)
                if field_changes:
                    self.zeuc_revision += 1
                if kind == "reset":
                    self.diagnostic = None
            elif kind == "pause":
                self.paused = True
            elif kind == "resume":
                self.paused = False
            elif kind == "set_time_scale":
                scale = float(payload["scale"])
                if not (math.isfinite(scale) and scale > 0.0):
                    raise ValueError(f"time scale must be > 0, got {scale}")
                self.time_scale = scale
            else:
                raise ValueError(f"unknown command kind {kind!r}")
        except (OrosoarError, ValueError, KeyError, TypeError) as exc:
            self._out_seq += 1
            session.outbox.push_ack({
                "type": "rejection",
                "seq": self._out_seq,
                "payload": {
                    "command_seq": client_seq,
                    "error": type(exc).__name__,
                    "message": str(exc),
                },
            })
            return
        self.trace.append(AppliedCommand(self.engine.total_steps, kind, dict(payload)))
        self._out_seq += 1
        session.outbox.push_ack({
            "type": "ack",
            "seq": self._out_seq,
            "payload": {"command_seq": client_seq, "effective_t": self.engine.t},
        })

    def _drain_commands(self) -> bool:
        """Apply all queued commands at the current step boundary."""
        applied = False
        while True:
            try:
                session, client_seq, payload = self.commands.get_nowait()
            except asyncio.QueueEmpty:
                return applied
            self._handle_command(session, client_seq, payload)
            applied = True

    # the loop --------------------------------------------------------------

    async def run_loop(self) -> None:
        dt = self.scenario.dt
        next_snapshot_tick = 0
        while True:
            state_changed = self._drain_commands()
            if self.paused:
                # Heartbeat: identical payload, fresh envelope seq.
                self._broadcast_snapshot()
                await asyncio.sleep(self.snapshot_period / self.time_scale)
                next_snapshot_tick = math.floor(
                    self.engine.t / self.snapshot_period + 1e-9)
                continue
            try:
                self.engine.step_once()
            except OrosoarError as exc:
                # stall, overspeed, or a field escape: hold the session
                # paused with the diagnostic; reset recovers it
                self.paused = True
                self.diagnostic = str(exc)
                self._broadcast_snapshot()
                continue
            tick = math.floor(self.engine.t / self.snapshot_period + 1e-9)
            if tick > next_snapshot_tick or state_changed:
                next_snapshot_tick = tick
                self._broadcast_snapshot()
            await asyncio.sleep(dt / self.time_scale)

    # aiohttp wiring ----------------------------------------------------------

    async def handle_ws(self, request: web.Request) -> web.WebSocketResponse:
        ws = web.WebSocketResponse()
        await ws.prepare(request)
        session = _Session(ws)
        self.sessions.add(session)
        # Greet with the current state (includes contour data).
        self._out_seq += 1
        payload = self.snapshot_of()
        payload["zeuc"] = self._zeuc_payload()
        session.last_zeuc_revision = self.zeuc_revision
        session.outbox.push_snapshot(
            {"type": "snapshot", "seq": self._out_seq, "payload": payload})

        async def writer():
            while not ws.closed:
                message = await session.outbox.next()
                await ws.send_json(message)

        writer_task = asyncio.create_task(writer())
        try:
            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                try:
                    envelope = json.loads(msg.data)
                    if envelope.get("type") != "command":
                        raise ValueError(
                            f"unsupported message type {envelope.get('type')!r}")
                    client_seq = envelope.get("seq")
                    payload = envelope["payload"]
                    if not isinstance(payload, dict):
                        raise ValueError("payload must be an object")
                except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
                    self._out_seq += 1
                    session.outbox.push_ack({
                        "type": "rejection",
                        "seq": self._out_seq,
                        "payload": {"command_seq": None,
                                    "error": type(exc).__name__,
                                    "message": str(exc)},
                    })
                    continue
                await self.commands.put((session, client_seq, payload))
        finally:
            self.sessions.discard(session)
            writer_task.cancel()
        return ws

    async def handle_info(self, request: web.Request) -> web.Response:
        return web.json_response({
            "schema_version": SCHEMA_VERSION,
            "scenario": scenario_to_json(self.scenario),
            "snapshot_period": self.snapshot_period,
            "time_scale": self.time_scale,
        })

    async def on_startup(self, app) -> None:
        self._loop_task = asyncio.create_task(self.run_loop())

    async def on_cleanup(self, app) -> None:
        if self._loop_task is not None:
            self._loop_task.cancel()
            try:
                await self._loop_task
            except asyncio.CancelledError:
                pass


def create_app(
    scenario: Scenario,
    *,
    time_scale: float = 1.0,
    snapshot_period: float = DEFAULT_SNAPSHOT_PERIOD,
    static_dir: Optional[Path] = None,
) -> tuple[web.Application, SoaringService]:
    """Build the aiohttp application plus its service object."""
    service = SoaringService(
        scenario, time_scale=time_scale, snapshot_period=snapshot_period)
    app = web.Application()
    app.router.add_get("/api/info", service.handle_info)
    app.router.add_get("/ws", service.handle_ws)
    if static_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static_dir = bundled if bundled.is_dir() else None
    if static_dir is not None and Path(static_dir).is_dir():
        static_dir = Path(static_dir)

        async def index(request):
            return web.FileResponse(static_dir / "index.html")

        app.router.add_get("/", index)
        app.router.add_static("/", static_dir)
    app.on_startup.append(service.on_startup)
    app.on_cleanup.append(service.on_cleanup)
    return app, service


def serve(
    scenario: Scenario,
    port: int,
    host: str = "127.0.0.1",
    *,
    time_scale: float = 1.0,
    snapshot_period: float = DEFAULT_SNAPSHOT_PERIOD,
) -> None:
    """Run the server until interrupted. Raises PortInUse when bound."""
    app, _ = create_app(
        scenario, time_scale=time_scale, snapshot_period=snapshot_period)
    try:
        web.run_app(app, host=host, port=port, print=None)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUse(f"port {port} on {host} is already in use") from exc
        raise
