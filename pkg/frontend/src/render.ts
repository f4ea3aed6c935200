// 2-D side-view rendering. Drawing goes through a small surface
// interface so tests can record draw calls without a DOM canvas.

import { SessionView } from "./state.js";

export interface DrawSurface {
  width: number;
  height: number;
  clear(color: string): void;
  line(x1: number, y1: number, x2: number, y2: number, color: string, width: number): void;
  rect(x: number, y: number, w: number, h: number, color: string): void;
  poly(points: Array<[number, number]>, color: string): void;
  text(x: number, y: number, s: string, color: string, size: number): void;
}

export class CanvasSurface implements DrawSurface {
  width: number;
  height: number;

  constructor(private ctx: CanvasRenderingContext2D, width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  clear(color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.fillRect(0, 0, this.width, this.height);
  }

  line(x1: number, y1: number, x2: number, y2: number, color: string, width: number): void {
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = width;
    this.ctx.beginPath();
    this.ctx.moveTo(x1, y1);
    this.ctx.lineTo(x2, y2);
    this.ctx.stroke();
  }

  rect(x: number, y: number, w: number, h: number, color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.fillRect(x, y, w, h);
  }

  poly(points: Array<[number, number]>, color: string): void {
    if (!points.length) return;
    this.ctx.fillStyle = color;
    this.ctx.beginPath();
    this.ctx.moveTo(points[0][0], points[0][1]);
    for (const [x, y] of points.slice(1)) this.ctx.lineTo(x, y);
    this.ctx.closePath();
    this.ctx.fill();
  }

  text(x: number, y: number, s: string, color: string, size: number): void {
    this.ctx.fillStyle = color;
    this.ctx.font = `${size}px monospace`;
    this.ctx.fillText(s, x, y);
  }
}

export const PHASE_COLORS = ["#888", "#4a90d9", "#7bc96f", "#e8a33d", "#d9534f"];

export function renderFlight(surface: DrawSurface, view: SessionView): void {
  const snap = view.snapshot();
  surface.clear("#10141a");
  const cx = surface.width * 0.5;
  const cy = surface.height * 0.45;

  // ground reference line
  surface.line(0, cy + 120, surface.width, cy + 120, "#2a3440", 1);

  // drone glyph: body segment rotated by pitch, wing chords scaled by fold
  const rad = (snap.thetaDeg * Math.PI) / 180;
  const bodyLen = 70;
  const dx = Math.cos(rad) * bodyLen * 0.5;
  const dy = Math.sin(rad) * bodyLen * 0.5;
  surface.line(cx - dx, cy + dy, cx + dx, cy - dy, "#d8dee9", 4);
  // thrust axis marker (up in the body frame)
  surface.line(cx, cy, cx + Math.sin(rad) * 26, cy - Math.cos(rad) * 26, "#6f8aa5", 2);
  // wings: area grows with fold_a, drawn as membrane triangles off the body
  const span = 12 + 48 * snap.foldA;
  const wing: Array<[number, number]> = [
    [cx - dx, cy + dy],
    [cx + dx, cy - dy],
    [cx - Math.sin(rad) * span, cy - Math.cos(rad) * span],
  ];
  surface.poly(wing, snap.foldA > 0.5 ? "#7bc96fcc" : "#4a556acc");

  // phase bar across the top
  const traj = view.traj;
  if (traj) {
    const w = surface.width - 40;
    const marks = [0, traj.t_A, traj.t_B, traj.t_C, traj.t_D, traj.end_time];
    for (let i = 0; i + 1 < marks.length; i++) {
      const x0 = 20 + (marks[i] / traj.end_time) * w;
      const x1 = 20 + (marks[i + 1] / traj.end_time) * w;
      const phase = i < 4 ? i + 1 : 0;
      surface.rect(x0, 16, x1 - x0, 10, PHASE_COLORS[phase] + (snap.phase === phase ? "" : "55"));
    }
    const xt = 20 + (Math.min(snap.t, traj.end_time) / traj.end_time) * w;
    surface.line(xt, 10, xt, 32, "#ffffff", 2);
    const labels = ["A", "B", "C", "D"];
    [traj.t_A, traj.t_B, traj.t_C, traj.t_D].forEach((tj, i) => {
      surface.text(20 + (tj / traj.end_time) * w - 3, 44, labels[i], "#9aa7b5", 11);
    });
  }

  // velocity gauge
  const vMax = 8;
  const frac = Math.min(Math.abs(snap.vX) / vMax, 1);
  surface.rect(20, surface.height - 40, surface.width - 40, 12, "#222b36");
  surface.rect(20, surface.height - 40, (surface.width - 40) * frac, 12,
    snap.vX >= 0 ? "#4a90d9" : "#d9534f");
  surface.text(20, surface.height - 48, `v_x ${snap.vX.toFixed(2)} m/s`, "#d8dee9", 12);

  // saturation indicator
  surface.rect(surface.width - 36, 56, 16, 16, snap.saturated ? "#d9534f" : "#2f4f33");
  surface.text(surface.width - 112, 68, "saturated", "#9aa7b5", 11);

  // status text
  surface.text(20, 68, `t=${snap.t.toFixed(2)}s  pitch=${snap.thetaDeg.toFixed(1)}deg  ` +
    `fold=${snap.foldA.toFixed(2)}  phase=${view.phaseLabel()}`, "#d8dee9", 12);
  surface.text(20, 86, `session: ${snap.status}  link: ${snap.connection}` +
    (snap.ackLatencyMs !== null ? `  cmd latency ${snap.ackLatencyMs.toFixed(0)} ms` : ""),
    "#9aa7b5", 11);
  if (snap.lastError) surface.text(20, 104, `error: ${snap.lastError}`, "#d9534f", 11);
  if (snap.lastSavedPath) surface.text(20, 122, `saved: ${snap.lastSavedPath}`, "#7bc96f", 11);
  if (snap.connection !== "open") {
    surface.rect(cx - 120, cy - 18, 240, 36, "#3a2a2acc");
    surface.text(cx - 96, cy + 4, "connection lost - reconnecting", "#ffb3b3", 12);
  }
}
