import { describe, expect, it } from "vitest";
import {
  encodeCommand,
  encodeControl,
  parseServerFrame,
  SCHEMA,
} from "../src/protocol.js";

describe("parseServerFrame", () => {
  it("accepts well-formed telemetry", () => {
    const frame = parseServerFrame(
      JSON.stringify({
        type: "telemetry", t: 0.5, x: 1, y: 0, theta_p_deg: 12,
        v_x: 3.2, phase: 2, fold_a: 0.0, sat_flag: false,
      }),
    );
    expect(frame).not.toBeNull();
    expect(frame!.type).toBe("telemetry");
  });

  it("rejects malformed JSON and unknown types", () => {
    expect(parseServerFrame("{nope")).toBeNull();
    expect(parseServerFrame(JSON.stringify({ type: "mystery" }))).toBeNull();
    expect(parseServerFrame(JSON.stringify({ no_type: 1 }))).toBeNull();
  });

  it("rejects hello frames with a different schema", () => {
    const bad = JSON.stringify({ type: "hello", schema: SCHEMA + 1, slowmo: 1, traj: {} });
    expect(parseServerFrame(bad)).toBeNull();
  });

  it("rejects telemetry missing numeric fields", () => {
    expect(parseServerFrame(JSON.stringify({ type: "telemetry", t: "x" }))).toBeNull();
  });
});

describe("encoders", () => {
  it("clamps fold commands into [0, 1]", () => {
    expect(JSON.parse(encodeCommand(3, 1.7)).fold_a).toBe(1);
    expect(JSON.parse(encodeCommand(4, -0.2)).fold_a).toBe(0);
    expect(JSON.parse(encodeCommand(5, 0.25)).fold_a).toBe(0.25);
  });

  it("encodes control actions verbatim", () => {
    expect(JSON.parse(encodeControl("start"))).toEqual({ type: "control", action: "start" });
  });
});
