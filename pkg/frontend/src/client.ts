// Websocket wrapper with auto-reconnect. The socket constructor is
// injectable so the protocol tests can drive a fake server.

import { parseServerFrame, ServerFrame } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientCallbacks {
  onFrame(frame: ServerFrame): void;
  onConnection(state: "connecting" | "open" | "closed"): void;
}

export class TeleopClient {
  private socket: SocketLike | null = null;
  private closedByUser = false;
  private reconnectDelayMs = 500;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private callbacks: ClientCallbacks,
    private factory: SocketFactory,
    private scheduler: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = setTimeout,
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.callbacks.onConnection("connecting");
    const sock = this.factory(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.reconnectDelayMs = 500;
      this.callbacks.onConnection("open");
    };
    sock.onmessage = (ev) => {
      const frame = parseServerFrame(ev.data);
      if (frame) this.callbacks.onFrame(frame);
    };
    sock.onclose = () => {
      this.callbacks.onConnection("closed");
      this.socket = null;
      if (!this.closedByUser) {
        this.timer = this.scheduler(() => this.connect(), this.reconnectDelayMs);
        this.reconnectDelayMs = Math.min(this.reconnectDelayMs * 2, 8000);
      }
    };
  }

  send(data: string): boolean {
    if (!this.socket) return false;
    this.socket.send(data);
    return true;
  }

  close(): void {
    this.closedByUser = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
  }
}
