// Wire types for the live-session protocol (schema version 1).
// Mirrors the server's envelope: {type, seq, payload} in both directions.

export interface TglCoefficients {
  a: number;
  b: number;
  c: number;
}

export interface ExcessGrid {
  xs: number[];
  zs: number[];
  // row-major over zs; null marks cells where the excess updraft is not
  // evaluable (inside the body, outside the polar range)
  values: (number | null)[][];
}

export interface ZeucPayload {
  polylines: [number, number][][];
  cell: number;
  excess_grid: ExcessGrid;
}

export interface Snapshot {
  t: number;
  step: number;
  x: number;
  z: number;
  v_a: number;
  theta: number;
  q: number;
  tgl: TglCoefficients;
  e_rho: number;
  lambda: number;
  theta_sp: number;
  equilibrium: { x: number; z: number; stability: string } | null;
  zeuc_revision: number;
  paused: boolean;
  diagnostic: string | null;
  zeuc?: ZeucPayload;
}

export interface AckPayload {
  command_seq: number | null;
  effective_t: number;
}

export interface RejectionPayload {
  command_seq: number | null;
  error: string;
  message: string;
}

export type ServerMessage =
  | { type: "snapshot"; seq: number; payload: Snapshot }
  | { type: "ack"; seq: number; payload: AckPayload }
  | { type: "rejection"; seq: number; payload: RejectionPayload };

export type CommandKind =
  | "set_tgl"
  | "translate_tgl"
  | "rotate_tgl"
  | "set_wind_scale"
  | "set_gains"
  | "pause"
  | "resume"
  | "reset"
  | "set_time_scale";

export interface CommandPayload {
  kind: CommandKind;
  [key: string]: unknown;
}

export interface CommandMessage {
  type: "command";
  seq: number;
  payload: CommandPayload;
}

export interface Domain {
  x_min: number;
  x_max: number;
  z_min: number;
  z_max: number;
}

export interface ServerInfo {
  schema_version: number;
  scenario: { domain: Domain; [key: string]: unknown };
  snapshot_period: number;
  time_scale: number;
}
