import { describe, expect, it } from "vitest";
import { CommandGate, SessionView, TelemetryRing } from "../src/state.js";
import { ServerFrame, TelemetryFrame } from "../src/protocol.js";

function tele(t: number, extra: Partial<TelemetryFrame> = {}): TelemetryFrame {
  return {
    type: "telemetry", t, x: 0, y: 0, theta_p_deg: 0,
    v_x: 0, phase: 1, fold_a: 0, sat_flag: false, ...extra,
  };
}

describe("TelemetryRing", () => {
  it("keeps only the trailing ten seconds", () => {
    const ring = new TelemetryRing();
    for (let k = 0; k <= 900; k++) ring.push(tele(k / 60));
    const window = ring.window();
    expect(window[0].t).toBeGreaterThanOrEqual(window[window.length - 1].t - 10.001);
    expect(ring.latest()!.t).toBeCloseTo(15, 5);
  });
});

describe("SessionView", () => {
  it("derives every displayed number from server frames alone", () => {
    const view = new SessionView();
    const frames: ServerFrame[] = [
      { type: "hello", schema: 1, slowmo: 0.25,
        traj: { total_time: 2, t_A: 0.37, t_B: 0.47, t_C: 0.77, t_D: 2, end_time: 2.5 } },
      { type: "state", status: "running" },
      tele(0.1, { v_x: 1.5, theta_p_deg: 20, fold_a: 0.3, phase: 1, sat_flag: true }),
    ];
    frames.forEach((f) => view.handle(f));
    const snap = view.snapshot();
    expect(snap.status).toBe("running");
    expect(snap.vX).toBe(1.5);
    expect(snap.thetaDeg).toBe(20);
    expect(snap.foldA).toBe(0.3);
    expect(snap.saturated).toBe(true);
    expect(view.phaseLabel()).toContain("1");
  });

  it("reconnect replays rebuild the same view from the stream alone", () => {
    const stream: ServerFrame[] = [
      { type: "hello", schema: 1, slowmo: 0.25,
        traj: { total_time: 2, t_A: 0.37, t_B: 0.47, t_C: 0.77, t_D: 2, end_time: 2.5 } },
      { type: "state", status: "running" },
      tele(0.1, { v_x: 1 }),
      tele(0.2, { v_x: 2 }),
      { type: "state", status: "done" },
      { type: "saved", path: "sessions/a.csv" },
    ];
    const a = new SessionView();
    stream.forEach((f) => a.handle(f));
    const b = new SessionView();
    stream.forEach((f) => b.handle(f));
    expect(b.snapshot()).toEqual(a.snapshot());
  });

  it("tracks ack latency from matching sequence numbers", () => {
    const view = new SessionView();
    view.noteCommandSent(7, 1000);
    view.handle({ type: "ack", seq: 7, t_sim: 0.5 }, 1025);
    expect(view.snapshot().ackLatencyMs).toBe(25);
  });

  it("records errors and saved paths", () => {
    const view = new SessionView();
    view.handle({ type: "error", message: "boom" });
    view.handle({ type: "saved", path: "x.csv" });
    expect(view.snapshot().lastError).toBe("boom");
    expect(view.snapshot().lastSavedPath).toBe("x.csv");
  });
});

describe("CommandGate", () => {
  it("debounces below the minimum interval and collapses to the latest", () => {
    const gate = new CommandGate(16);
    expect(gate.offer(1, 0)).toEqual({ seq: 0, value: 1 });
    expect(gate.offer(0, 5)).toBeNull();      // too soon
    expect(gate.offer(0.5, 10)).toBeNull();   // still too soon, replaces pending
    const flushed = gate.flush(20);
    expect(flushed).toEqual({ seq: 1, value: 0.5 });
  });

  it("suppresses duplicate values entirely", () => {
    const gate = new CommandGate(16);
    gate.offer(1, 0);
    expect(gate.offer(1, 100)).toBeNull();
    expect(gate.flush(200)).toBeNull();
  });

  it("clamps out-of-range values", () => {
    const gate = new CommandGate(0);
    expect(gate.offer(7, 0)).toEqual({ seq: 0, value: 1 });
  });
});
