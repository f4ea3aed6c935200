// Wire protocol shared with the teleop server: JSON text frames over a
// websocket. Every displayed value originates from one of these frames.

export const SCHEMA = 1;

export interface TrajInfo {
  total_time: number;
  t_A: number;
  t_B: number;
  t_C: number;
  t_D: number;
  end_time: number;
}

export interface HelloFrame {
  type: "hello";
  schema: number;
  slowmo: number;
  traj: TrajInfo;
}

export interface TelemetryFrame {
  type: "telemetry";
  t: number;
  x: number;
  y: number;
  theta_p_deg: number;
  v_x: number;
  phase: number;
  fold_a: number;
  sat_flag: boolean;
}

export interface StateFrame {
  type: "state";
  status: "idle" | "armed" | "running" | "done";
  control?: string;
}

export interface AckFrame {
  type: "ack";
  seq?: number;
  t_sim?: number;
  clamped?: boolean;
}

export interface SavedFrame {
  type: "saved";
  path: string;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export interface HeartbeatFrame {
  type: "heartbeat";
  t_wall: number;
}

export type ServerFrame =
  | HelloFrame
  | TelemetryFrame
  | StateFrame
  | AckFrame
  | SavedFrame
  | ErrorFrame
  | HeartbeatFrame;

export interface CommandFrame {
  type: "command";
  seq: number;
  fold_a: number;
}

export interface ControlFrame {
  type: "control";
  action: "start" | "stop" | "save" | "discard";
}

export type ClientFrame = CommandFrame | ControlFrame;

const SERVER_TYPES = new Set([
  "hello",
  "telemetry",
  "state",
  "ack",
  "saved",
  "error",
  "heartbeat",
]);

export function parseServerFrame(raw: string): ServerFrame | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const frame = obj as { type?: unknown };
  if (typeof frame.type !== "string" || !SERVER_TYPES.has(frame.type)) return null;
  if (frame.type === "hello") {
    const h = obj as HelloFrame;
    if (h.schema !== SCHEMA) return null; // refuse to render unknown schemas
  }
  if (frame.type === "telemetry") {
    const t = obj as TelemetryFrame;
    if (typeof t.t !== "number" || typeof t.fold_a !== "number") return null;
  }
  return obj as ServerFrame;
}

export function encodeCommand(seq: number, foldA: number): string {
  const clamped = Math.min(1, Math.max(0, foldA));
  return JSON.stringify({ type: "command", seq, fold_a: clamped });
}

export function encodeControl(action: ControlFrame["action"]): string {
  return JSON.stringify({ type: "control", action });
}
