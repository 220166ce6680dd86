// Gesture logic, kept free of DOM types so it can be tested headless.
// A drag produces a local preview while it lasts and exactly one command
// when it completes; the authoritative line is always the snapshot's.

import type { CommandPayload, TglCoefficients } from "./protocol";

export type Point = [number, number];

export function tglPointAt(tgl: TglCoefficients, z: number): Point {
  return [-(tgl.b * z + tgl.c) / tgl.a, z];
}

export function translatedTgl(
  tgl: TglCoefficients,
  dx: number,
  dz: number,
): TglCoefficients {
  return { a: tgl.a, b: tgl.b, c: tgl.c - (tgl.a * dx + tgl.b * dz) };
}

export function rotatedTgl(
  tgl: TglCoefficients,
  pivot: Point,
  dangle: number,
): TglCoefficients {
  const cos = Math.cos(dangle);
  const sin = Math.sin(dangle);
  let a = cos * tgl.a - sin * tgl.b;
  let b = sin * tgl.a + cos * tgl.b;
  let c =
    tgl.a * pivot[0] + tgl.b * pivot[1] + tgl.c - (a * pivot[0] + b * pivot[1]);
  if (a < 0) {
    a = -a;
    b = -b;
    c = -c;
  }
  return { a, b, c };
}

export type DragMode = "translate" | "rotate";

export class TglDrag {
  readonly mode: DragMode;
  private start: Point;
  private base: TglCoefficients;
  private pivot: Point;
  private current: Point;
  private moved = false;

  constructor(
    mode: DragMode,
    base: TglCoefficients,
    start: Point,
    pivot: Point = [0, 0],
  ) {
    this.mode = mode;
    this.base = { ...base };
    this.start = start;
    this.pivot = pivot;
    this.current = start;
  }

  move(world: Point): void {
    this.current = world;
    if (world[0] !== this.start[0] || world[1] !== this.start[1]) {
      this.moved = true;
    }
  }

  private delta(): { dx: number; dz: number } {
    return {
      dx: this.current[0] - this.start[0],
      dz: this.current[1] - this.start[1],
    };
  }

  private angleDelta(): number {
    const a0 = Math.atan2(
      this.start[1] - this.pivot[1],
      this.start[0] - this.pivot[0],
    );
    const a1 = Math.atan2(
      this.current[1] - this.pivot[1],
      this.current[0] - this.pivot[0],
    );
    return a1 - a0;
  }

  /** Line to draw while the drag is in progress (local preview only). */
  preview(): TglCoefficients {
    if (this.mode === "translate") {
      const { dx, dz } = this.delta();
      return translatedTgl(this.base, dx, dz);
    }
    return rotatedTgl(this.base, this.pivot, this.angleDelta());
  }

  /** The single command this gesture amounts to; null if nothing moved. */
  finish(world: Point): CommandPayload | null {
    this.move(world);
    if (!this.moved) return null;
    if (this.mode === "translate") {
      const { dx, dz } = this.delta();
      return { kind: "translate_tgl", dx, dz };
    }
    return {
      kind: "rotate_tgl",
      pivot: [this.pivot[0], this.pivot[1]],
      dangle: this.angleDelta(),
    };
  }
}

/** Slider adjustments preview continuously and emit once on release. */
export class SliderGesture {
  private initial: number;
  private current: number;

  constructor(
    initial: number,
    private makeCommand: (value: number) => CommandPayload,
  ) {
    this.initial = initial;
    this.current = initial;
  }

  drag(value: number): number {
    this.current = value;
    return value;
  }

  release(value: number): CommandPayload | null {
    this.current = value;
    if (this.current === this.initial) return null;
    return this.makeCommand(this.current);
  }
}
