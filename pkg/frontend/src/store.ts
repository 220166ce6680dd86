// Client-side view state. The simulation state is never mutated locally:
// the latest snapshot is the single source of truth, commands round-trip
// through the server, and pending commands are reconciled by their acks.

import type {
  AckPayload,
  RejectionPayload,
  Snapshot,
  ZeucPayload,
} from "./protocol";

export interface CommandOutcome {
  seq: number;
  kind: string;
  status: "pending" | "acked" | "rejected";
  effectiveT?: number;
  error?: string;
  message?: string;
}

export const TRACE_CAPACITY = 2000;

export class ViewState {
  latest: Snapshot | null = null;
  zeuc: ZeucPayload | null = null;
  zeucRevision = -1;
  trace: [number, number][] = [];
  connected = false;
  pending = new Map<number, CommandOutcome>();
  log: CommandOutcome[] = [];
  private lastTraceStep = -1;

  applySnapshot(snapshot: Snapshot): void {
    this.latest = snapshot;
    if (snapshot.zeuc) {
      this.zeuc = snapshot.zeuc;
      this.zeucRevision = snapshot.zeuc_revision;
    }
    // heartbeat snapshots repeat the same step; record motion only
    if (snapshot.step !== this.lastTraceStep) {
      this.lastTraceStep = snapshot.step;
      this.trace.push([snapshot.x, snapshot.z]);
      if (this.trace.length > TRACE_CAPACITY) {
        this.trace.splice(0, this.trace.length - TRACE_CAPACITY);
      }
    }
  }

  commandSent(seq: number, kind: string): void {
    const outcome: CommandOutcome = { seq, kind, status: "pending" };
    this.pending.set(seq, outcome);
    this.log.push(outcome);
  }

  applyAck(payload: AckPayload): void {
    if (payload.command_seq === null) return;
    const outcome = this.pending.get(payload.command_seq);
    if (!outcome) return;
    outcome.status = "acked";
    outcome.effectiveT = payload.effective_t;
    this.pending.delete(payload.command_seq);
  }

  applyRejection(payload: RejectionPayload): void {
    if (payload.command_seq === null) return;
    const outcome = this.pending.get(payload.command_seq);
    if (!outcome) return;
    outcome.status = "rejected";
    outcome.error = payload.error;
    outcome.message = payload.message;
    this.pending.delete(payload.command_seq);
  }

  get pendingCount(): number {
    return this.pending.size;
  }

  clearTrace(): void {
    this.trace = [];
    this.lastTraceStep = -1;
  }
}
