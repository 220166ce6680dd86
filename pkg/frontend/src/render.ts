// Immediate-mode canvas renderer: heatmap, contour, target line with
// handles, aircraft marker with fading trace, equilibrium marker.

import type { Domain, ExcessGrid, TglCoefficients } from "./protocol";
import { tglPointAt } from "./gestures";
import type { Point } from "./gestures";
import { toScreen, Transform } from "./transform";
import type { ViewState } from "./store";

const EXCESS_SPAN = 1.5; // m/s mapped to full color

function excessColor(value: number | null): [number, number, number, number] {
  if (value === null) return [40, 40, 48, 255]; // unknown: dark slate
  const t = Math.max(-1, Math.min(1, value / EXCESS_SPAN));
  if (t >= 0) {
    // surplus: deep blue toward warm orange
    return [40 + 200 * t, 60 + 120 * t, 120 - 60 * t, 255];
  }
  return [40, 60 + 30 * t, 120 - 80 * t, 255];
}

export function buildHeatmap(grid: ExcessGrid): ImageData {
  const nx = grid.xs.length;
  const nz = grid.zs.length;
  const image = new ImageData(nx, nz);
  for (let j = 0; j < nz; j += 1) {
    for (let i = 0; i < nx; i += 1) {
      // canvas rows go top-down; world z goes up
      const row = nz - 1 - j;
      const [r, g, b, a] = excessColor(grid.values[j][i]);
      const k = 4 * (row * nx + i);
      image.data[k] = r;
      image.data[k + 1] = g;
      image.data[k + 2] = b;
      image.data[k + 3] = a;
    }
  }
  return image;
}

export interface HandlePositions {
  low: Point;
  high: Point;
}

/** Endpoints of the visible line segment, clipped to the domain's z span. */
export function tglHandles(tgl: TglCoefficients, domain: Domain): HandlePositions {
  const span = domain.z_max - domain.z_min;
  const zLow = domain.z_min + 0.12 * span;
  const zHigh = domain.z_max - 0.12 * span;
  return { low: tglPointAt(tgl, zLow), high: tglPointAt(tgl, zHigh) };
}

export class Renderer {
  private heatmapCanvas: HTMLCanvasElement | null = null;
  private heatmapRevision = -1;

  constructor(
    private ctx: CanvasRenderingContext2D,
    private domain: Domain,
  ) {}

  draw(state: ViewState, transform: Transform, previewTgl: TglCoefficients | null): void {
    const { ctx } = this;
    const { width, height } = ctx.canvas;
    ctx.fillStyle = "#14141a";
    ctx.fillRect(0, 0, width, height);

    this.drawHeatmap(state, transform);
    this.drawContour(state, transform);
    this.drawEquilibrium(state, transform);
    this.drawTrace(state, transform);
    this.drawAircraft(state, transform);
    const snapshotTgl = state.latest?.tgl ?? null;
    if (snapshotTgl) this.drawTgl(snapshotTgl, transform, false);
    if (previewTgl) this.drawTgl(previewTgl, transform, true);
    this.drawBanners(state);
  }

  private drawHeatmap(state: ViewState, transform: Transform): void {
    const zeuc = state.zeuc;
    if (!zeuc) return;
    if (this.heatmapRevision !== state.zeucRevision || !this.heatmapCanvas) {
      const image = buildHeatmap(zeuc.excess_grid);
      const off = document.createElement("canvas");
      off.width = image.width;
      off.height = image.height;
      off.getContext("2d")!.putImageData(image, 0, 0);
      this.heatmapCanvas = off;
      this.heatmapRevision = state.zeucRevision;
    }
    const grid = zeuc.excess_grid;
    const [left, top] = toScreen(transform, grid.xs[0], grid.zs[grid.zs.length - 1]);
    const [right, bottom] = toScreen(transform, grid.xs[grid.xs.length - 1], grid.zs[0]);
    this.ctx.imageSmoothingEnabled = true;
    this.ctx.globalAlpha = 0.85;
    this.ctx.drawImage(this.heatmapCanvas, left, top, right - left, bottom - top);
    this.ctx.globalAlpha = 1.0;
  }

  private drawContour(state: ViewState, transform: Transform): void {
    if (!state.zeuc) return;
    const { ctx } = this;
    ctx.strokeStyle = "#7fd4ff";
    ctx.lineWidth = 2;
    for (const poly of state.zeuc.polylines) {
      ctx.beginPath();
      poly.forEach(([x, z], i) => {
        const [px, py] = toScreen(transform, x, z);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
    }
  }

  private drawTgl(tgl: TglCoefficients, transform: Transform, preview: boolean): void {
    const { ctx } = this;
    const handles = tglHandles(tgl, this.domain);
    const [x0, y0] = toScreen(transform, handles.low[0], handles.low[1]);
    const [x1, y1] = toScreen(transform, handles.high[0], handles.high[1]);
    ctx.strokeStyle = preview ? "rgba(255,220,120,0.6)" : "#ffd166";
    ctx.setLineDash(preview ? [6, 6] : []);
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    ctx.setLineDash([]);
    if (!preview) {
      for (const [hx, hy] of [
        [x0, y0],
        [x1, y1],
      ]) {
        ctx.fillStyle = "#ffd166";
        ctx.beginPath();
        ctx.arc(hx, hy, 6, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
  }

  private drawEquilibrium(state: ViewState, transform: Transform): void {
    const eq = state.latest?.equilibrium;
    if (!eq) return;
    const [px, py] = toScreen(transform, eq.x, eq.z);
    const { ctx } = this;
    ctx.strokeStyle = eq.stability === "stable" ? "#7dff9b" : "#ff7d7d";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 9, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(px - 13, py);
    ctx.lineTo(px + 13, py);
    ctx.moveTo(px, py - 13);
    ctx.lineTo(px, py + 13);
    ctx.stroke();
  }

  private drawTrace(state: ViewState, transform: Transform): void {
    const n = state.trace.length;
    if (n < 2) return;
    const { ctx } = this;
    for (let i = 1; i < n; i += 1) {
      const alpha = 0.1 + (0.9 * i) / n;
      const [ax, ay] = toScreen(transform, state.trace[i - 1][0], state.trace[i - 1][1]);
      const [bx, by] = toScreen(transform, state.trace[i][0], state.trace[i][1]);
      ctx.strokeStyle = `rgba(255,255,255,${alpha.toFixed(3)})`;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }
  }

  private drawAircraft(state: ViewState, transform: Transform): void {
    const snap = state.latest;
    if (!snap) return;
    const [px, py] = toScreen(transform, snap.x, snap.z);
    const { ctx } = this;
    ctx.save();
    ctx.translate(px, py);
    ctx.rotate(-snap.theta);
    ctx.fillStyle = "#ffffff";
    ctx.beginPath();
    ctx.moveTo(10, 0);
    ctx.lineTo(-8, 5);
    ctx.lineTo(-5, 0);
    ctx.lineTo(-8, -5);
    ctx.closePath();
    ctx.fill();
    ctx.restore();
  }

  private drawBanners(state: ViewState): void {
    const { ctx } = this;
    ctx.font = "14px system-ui, sans-serif";
    if (!state.connected) {
      ctx.fillStyle = "#ff7d7d";
      ctx.fillText("disconnected - showing last data", 12, 20);
    } else if (state.latest && !state.latest.equilibrium) {
      ctx.fillStyle = "#ffd166";
      ctx.fillText("TGL does not cross ZEUC", 12, 20);
    }
    if (state.latest?.paused) {
      ctx.fillStyle = "#7fd4ff";
      ctx.fillText("paused", 12, 40);
    }
    if (state.latest?.diagnostic) {
      ctx.fillStyle = "#ff7d7d";
      ctx.fillText(`run halted: ${state.latest.diagnostic}`, 12, 60);
    }
  }
}
