// Operator input: spacebar hold = unfold, release = fold; an analog
// slider behind a toggle for fine control. Commands flow through the
// debouncing gate so the wire never carries more than the telemetry rate.

import { CommandGate } from "./state.js";
import { encodeCommand } from "./protocol.js";

export type SendFn = (data: string) => void;

export class FoldInput {
  readonly gate: CommandGate;
  private analogMode = false;
  private sliderValue = 0;
  private spaceHeld = false;

  constructor(private send: SendFn, minIntervalMs: number, private now: () => number = () => Date.now()) {
    this.gate = new CommandGate(minIntervalMs);
  }

  setAnalogMode(on: boolean): void {
    this.analogMode = on;
    this.emit();
  }

  keyDown(code: string): void {
    if (code !== "Space" || this.spaceHeld) return;
    this.spaceHeld = true;
    if (!this.analogMode) this.emit();
  }

  keyUp(code: string): void {
    if (code !== "Space") return;
    this.spaceHeld = false;
    if (!this.analogMode) this.emit();
  }

  slider(value: number): void {
    this.sliderValue = value;
    if (this.analogMode) this.emit();
  }

  currentTarget(): number {
    return this.analogMode ? this.sliderValue : this.spaceHeld ? 1 : 0;
  }

  private emit(): void {
    const msg = this.gate.offer(this.currentTarget(), this.now());
    if (msg) this.send(encodeCommand(msg.seq, msg.value));
  }

  // called on a timer so debounced values eventually go out
  pump(): void {
    const msg = this.gate.flush(this.now());
    if (msg) this.send(encodeCommand(msg.seq, msg.value));
  }
}
