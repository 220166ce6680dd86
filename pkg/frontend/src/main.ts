// Operator console wiring: one canvas, a command panel, one websocket.

import { Connection } from "./connection";
import { SliderGesture, TglDrag } from "./gestures";
import type { Point } from "./gestures";
import type { CommandPayload, ServerInfo, TglCoefficients } from "./protocol";
import { Renderer, tglHandles } from "./render";
import { fitDomain, toScreen, toWorld } from "./transform";
import { ViewState } from "./store";

const HANDLE_RADIUS_PX = 10;
const LINE_GRAB_PX = 8;

async function boot(): Promise<void> {
  const info: ServerInfo = await (await fetch("/api/info")).json();
  const domain = info.scenario.domain;

  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const state = new ViewState();
  const renderer = new Renderer(ctx, domain);
  let transform = fitDomain(domain, canvas.width, canvas.height);

  const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  const connection = new Connection(state, url);
  connection.connect();

  let drag: TglDrag | null = null;
  let preview: TglCoefficients | null = null;

  function snapshotTgl(): TglCoefficients | null {
    return state.latest?.tgl ?? null;
  }

  function hit(px: number, py: number): { mode: "translate" | "rotate"; pivot: Point } | null {
    const tgl = snapshotTgl();
    if (!tgl) return null;
    const handles = tglHandles(tgl, domain);
    const low = toScreen(transform, handles.low[0], handles.low[1]);
    const high = toScreen(transform, handles.high[0], handles.high[1]);
    if (Math.hypot(px - high[0], py - high[1]) < HANDLE_RADIUS_PX) {
      return { mode: "rotate", pivot: handles.low };
    }
    if (Math.hypot(px - low[0], py - low[1]) < HANDLE_RADIUS_PX) {
      return { mode: "rotate", pivot: handles.high };
    }
    // distance from the pointer to the line, in screen px
    const [wx, wz] = toWorld(transform, px, py);
    const worldDist = Math.abs(tgl.a * wx + tgl.b * wz + tgl.c);
    if (worldDist * transform.scale < LINE_GRAB_PX) {
      return { mode: "translate", pivot: [0, 0] };
    }
    return null;
  }

  canvas.addEventListener("pointerdown", (ev) => {
    const target = hit(ev.offsetX, ev.offsetY);
    const tgl = snapshotTgl();
    if (!target || !tgl) return;
    canvas.setPointerCapture(ev.pointerId);
    drag = new TglDrag(
      target.mode,
      tgl,
      toWorld(transform, ev.offsetX, ev.offsetY),
      target.pivot,
    );
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!drag) return;
    drag.move(toWorld(transform, ev.offsetX, ev.offsetY));
    preview = drag.preview();
  });
  canvas.addEventListener("pointerup", (ev) => {
    if (!drag) return;
    const command = drag.finish(toWorld(transform, ev.offsetX, ev.offsetY));
    drag = null;
    preview = null;
    if (command) connection.send(command);
  });

  wirePanel(connection, state);

  function frame(): void {
    renderer.draw(state, transform, preview);
    updateReadouts(state);
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);

  window.addEventListener("resize", () => {
    transform = fitDomain(domain, canvas.width, canvas.height);
  });
}

function wirePanel(connection: Connection, state: ViewState): void {
  const send = (payload: CommandPayload) => connection.send(payload);

  bindSlider("wind-scale", (v) => ({ kind: "set_wind_scale", scale: v }), send);
  bindSlider("time-scale", (v) => ({ kind: "set_time_scale", scale: v }), send);

  byId("pause").addEventListener("click", () => send({ kind: "pause" }));
  byId("resume").addEventListener("click", () => send({ kind: "resume" }));
  byId("reset").addEventListener("click", () => {
    send({ kind: "reset" });
    state.clearTrace();
  });

  byId("apply-gains").addEventListener("click", () => {
    const gains = (prefix: string) => ({
      kp: numberField(`${prefix}-kp`),
      ki: numberField(`${prefix}-ki`),
      kd: numberField(`${prefix}-kd`),
    });
    send({ kind: "set_gains", pitch: gains("pitch"), elevator: gains("elev") });
  });
}

function bindSlider(
  id: string,
  make: (value: number) => CommandPayload,
  send: (payload: CommandPayload) => void,
): void {
  const input = byId(id) as HTMLInputElement;
  const label = byId(`${id}-value`);
  let gesture: SliderGesture | null = null;
  input.addEventListener("input", () => {
    gesture ??= new SliderGesture(Number(input.defaultValue), make);
    label.textContent = input.value;
    gesture.drag(Number(input.value));
  });
  input.addEventListener("change", () => {
    gesture ??= new SliderGesture(Number(input.defaultValue), make);
    const command = gesture.release(Number(input.value));
    gesture = null;
    input.defaultValue = input.value;
    if (command) send(command);
  });
}

function updateReadouts(state: ViewState): void {
  const snap = state.latest;
  if (snap) {
    byId("readout").textContent =
      `t=${snap.t.toFixed(2)}s  pos=(${snap.x.toFixed(2)}, ${snap.z.toFixed(2)})  ` +
      `v=${snap.v_a.toFixed(2)} m/s  pitch=${snap.theta.toFixed(3)} rad  ` +
      `e_rho=${snap.e_rho.toFixed(3)} m  wind x${snap.lambda.toFixed(3)}`;
  }
  const log = byId("command-log");
  const lines = state.log.slice(-8).map((o) => {
    if (o.status === "pending") return `#${o.seq} ${o.kind} ...`;
    if (o.status === "acked")
      return `#${o.seq} ${o.kind} ok @ t=${o.effectiveT?.toFixed(2)}s`;
    return `#${o.seq} ${o.kind} rejected: ${o.error}: ${o.message}`;
  });
  log.textContent = lines.join("\n");
}

function byId(id: string): HTMLElement {
  return document.getElementById(id)!;
}

function numberField(id: string): number {
  return Number((byId(id) as HTMLInputElement).value);
}

boot().catch((err) => {
  document.body.textContent = `failed to start: ${err}`;
});
