import { describe, expect, it } from "vitest";
import { SocketLike, TeleopClient } from "../src/client.js";
import { ServerFrame } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  closed = false;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  serverSend(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }
}

function harness() {
  const sockets: FakeSocket[] = [];
  const frames: ServerFrame[] = [];
  const states: string[] = [];
  const timers: Array<() => void> = [];
  const client = new TeleopClient(
    "ws://test/ws",
    {
      onFrame: (f) => frames.push(f),
      onConnection: (s) => states.push(s),
    },
    () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    (fn) => {
      timers.push(fn);
      return 0 as unknown as ReturnType<typeof setTimeout>;
    },
  );
  return { client, sockets, frames, states, timers };
}

describe("TeleopClient", () => {
  it("delivers parsed frames and drops junk", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onopen?.();
    h.sockets[0].serverSend({ type: "state", status: "armed" });
    h.sockets[0].onmessage?.({ data: "garbage{{{" });
    h.sockets[0].serverSend({ type: "unknown_frame" });
    expect(h.frames).toEqual([{ type: "state", status: "armed" }]);
  });

  it("reconnects after an unexpected close", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onopen?.();
    h.sockets[0].onclose?.();
    expect(h.timers.length).toBe(1);
    h.timers[0]();
    expect(h.sockets.length).toBe(2);
    expect(h.states).toEqual(["connecting", "open", "closed", "connecting"]);
  });

  it("stays closed when the user closes", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onopen?.();
    h.client.close();
    expect(h.timers.length).toBe(0);
    expect(h.sockets.length).toBe(1);
  });

  it("sends only while a socket exists", () => {
    const h = harness();
    expect(h.client.send("x")).toBe(false);
    h.client.connect();
    expect(h.client.send("y")).toBe(true);
    expect(h.sockets[0].sent).toEqual(["y"]);
  });
});
