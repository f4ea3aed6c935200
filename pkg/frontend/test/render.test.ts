import { describe, expect, it } from "vitest";
import { DrawSurface, renderFlight } from "../src/render.js";
import { SessionView } from "../src/state.js";
import { ServerFrame, TelemetryFrame } from "../src/protocol.js";

class RecordingSurface implements DrawSurface {
  width = 860;
  height = 420;
  calls: Array<{ op: string; args: unknown[] }> = [];

  clear(...args: unknown[]): void { this.calls.push({ op: "clear", args }); }
  line(...args: unknown[]): void { this.calls.push({ op: "line", args }); }
  rect(...args: unknown[]): void { this.calls.push({ op: "rect", args }); }
  poly(...args: unknown[]): void { this.calls.push({ op: "poly", args }); }
  text(...args: unknown[]): void { this.calls.push({ op: "text", args }); }

  textBlob(): string {
    return this.calls.filter((c) => c.op === "text").map((c) => String(c.args[2])).join(" | ");
  }
}

function feed(view: SessionView, frames: ServerFrame[]): void {
  frames.forEach((f) => view.handle(f));
}

const HELLO: ServerFrame = {
  type: "hello", schema: 1, slowmo: 0.25,
  traj: { total_time: 2, t_A: 0.37, t_B: 0.47, t_C: 0.77, t_D: 2, end_time: 2.5 },
};

function tele(t: number, extra: Partial<TelemetryFrame> = {}): TelemetryFrame {
  return {
    type: "telemetry", t, x: 0, y: 0, theta_p_deg: 0,
    v_x: 0, phase: 1, fold_a: 0, sat_flag: false, ...extra,
  };
}

describe("renderFlight", () => {
  it("renders phase and numbers straight from the server stream", () => {
    const view = new SessionView();
    feed(view, [HELLO, { type: "state", status: "running" },
      tele(0.6, { v_x: 3.25, theta_p_deg: 41.3, fold_a: 0.8, phase: 3 })]);
    const surface = new RecordingSurface();
    renderFlight(surface, view);
    const blob = surface.textBlob();
    expect(blob).toContain("3.25");
    expect(blob).toContain("41.3");
    expect(blob).toContain("0.80");
    expect(blob).toContain("3 (B-C)");
  });

  it("wing glyph area grows with fold_a", () => {
    function wingSpan(foldA: number): number {
      const view = new SessionView();
      feed(view, [HELLO, tele(0.1, { fold_a: foldA })]);
      const surface = new RecordingSurface();
      renderFlight(surface, view);
      const poly = surface.calls.find((c) => c.op === "poly");
      const pts = poly!.args[0] as Array<[number, number]>;
      const ys = pts.map((p) => p[1]);
      return Math.max(...ys) - Math.min(...ys);
    }
    expect(wingSpan(1)).toBeGreaterThan(wingSpan(0.5));
    expect(wingSpan(0.5)).toBeGreaterThan(wingSpan(0));
  });

  it("shows a reconnect banner when the link is down", () => {
    const view = new SessionView();
    feed(view, [HELLO]);
    view.connection = "closed";
    const surface = new RecordingSurface();
    renderFlight(surface, view);
    expect(surface.textBlob()).toContain("reconnecting");
  });

  it("runs a whole protocol replay without exceptions", () => {
    const view = new SessionView();
    const stream: ServerFrame[] = [HELLO, { type: "state", status: "armed" }];
    for (let k = 0; k < 300; k++) {
      stream.push(tele(k / 60, { v_x: Math.sin(k / 20) * 4, phase: (k % 5) as number }));
    }
    stream.push({ type: "state", status: "done" });
    feed(view, stream);
    const surface = new RecordingSurface();
    renderFlight(surface, view);
    expect(surface.calls.length).toBeGreaterThan(10);
  });
});
