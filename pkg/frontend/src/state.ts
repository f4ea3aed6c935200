// Session view-model: everything the panel renders, derived purely from
// server frames. The client owns no physics; reconnecting rebuilds the
// view from the stream alone.

import {
  ServerFrame,
  TelemetryFrame,
  TrajInfo,
} from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "closed";
export type SessionStatus = "idle" | "armed" | "running" | "done";

const RING_SECONDS = 10;
const RING_CAPACITY = 60 * RING_SECONDS;

export class TelemetryRing {
  private buf: TelemetryFrame[] = [];

  push(frame: TelemetryFrame): void {
    this.buf.push(frame);
    // keep only the trailing window
    while (
      this.buf.length > 1 &&
      (this.buf.length > RING_CAPACITY ||
        frame.t - this.buf[0].t > RING_SECONDS)
    ) {
      this.buf.shift();
    }
  }

  latest(): TelemetryFrame | null {
    return this.buf.length ? this.buf[this.buf.length - 1] : null;
  }

  window(): readonly TelemetryFrame[] {
    return this.buf;
  }

  clear(): void {
    this.buf = [];
  }
}

export interface ViewSnapshot {
  connection: ConnectionState;
  status: SessionStatus;
  t: number;
  thetaDeg: number;
  vX: number;
  foldA: number;
  phase: number;
  saturated: boolean;
  lastSavedPath: string | null;
  lastError: string | null;
  ackLatencyMs: number | null;
}

export class SessionView {
  connection: ConnectionState = "connecting";
  status: SessionStatus = "idle";
  traj: TrajInfo | null = null;
  slowmo = 1;
  ring = new TelemetryRing();
  lastSavedPath: string | null = null;
  lastError: string | null = null;
  ackLatencyMs: number | null = null;
  private pendingSent = new Map<number, number>();

  noteCommandSent(seq: number, wallMs: number): void {
    this.pendingSent.set(seq, wallMs);
  }

  handle(frame: ServerFrame, wallMs = 0): void {
    switch (frame.type) {
      case "hello":
        this.traj = frame.traj;
        this.slowmo = frame.slowmo;
        break;
      case "state":
        this.status = frame.status;
        if (frame.control === "discard") this.ring.clear();
        break;
      case "telemetry":
        this.ring.push(frame);
        break;
      case "ack": {
        if (frame.seq !== undefined && this.pendingSent.has(frame.seq)) {
          // latency display only; server sim time stays authoritative
          this.ackLatencyMs = wallMs - (this.pendingSent.get(frame.seq) as number);
          this.pendingSent.delete(frame.seq);
        }
        break;
      }
      case "saved":
        this.lastSavedPath = frame.path;
        break;
      case "error":
        this.lastError = frame.message;
        break;
      case "heartbeat":
        break;
    }
  }

  phaseLabel(): string {
    const latest = this.ring.latest();
    if (!latest || !this.traj) return "-";
    const names = ["rest", "1 (to A)", "2 (A-B)", "3 (B-C)", "4 (C-D)"];
    return names[latest.phase] ?? "-";
  }

  snapshot(): ViewSnapshot {
    const latest = this.ring.latest();
    return {
      connection: this.connection,
      status: this.status,
      t: latest?.t ?? 0,
      thetaDeg: latest?.theta_p_deg ?? 0,
      vX: latest?.v_x ?? 0,
      foldA: latest?.fold_a ?? 0,
      phase: latest?.phase ?? 0,
      saturated: latest?.sat_flag ?? false,
      lastSavedPath: this.lastSavedPath,
      lastError: this.lastError,
      ackLatencyMs: this.ackLatencyMs,
    };
  }
}

// Command debouncing: fold commands are emitted at most at the telemetry
// rate; intermediate values between ticks collapse to the latest one.
export class CommandGate {
  private seq = 0;
  private lastSentWall = -Infinity;
  private lastValue: number | null = null;
  private pending: number | null = null;

  constructor(private minIntervalMs: number) {}

  offer(value: number, wallMs: number): { seq: number; value: number } | null {
    const clamped = Math.min(1, Math.max(0, value));
    if (this.lastValue !== null && clamped === this.lastValue) {
      this.pending = null;
      return null; // zero-order hold server-side: resending is pointless
    }
    if (wallMs - this.lastSentWall < this.minIntervalMs) {
      this.pending = clamped;
      return null;
    }
    this.lastSentWall = wallMs;
    this.lastValue = clamped;
    this.pending = null;
    return { seq: this.seq++, value: clamped };
  }

  flush(wallMs: number): { seq: number; value: number } | null {
    if (this.pending === null) return null;
    const v = this.pending;
    this.pending = null;
    return this.offer(v, wallMs);
  }
}
