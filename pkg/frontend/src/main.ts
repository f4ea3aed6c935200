// Panel wiring: socket, view-model, canvas, keyboard, session buttons.
// Server host/port come from query parameters (?host=..&port=..).

import { TeleopClient } from "./client.js";
import { FoldInput } from "./input.js";
import { encodeControl } from "./protocol.js";
import { CanvasSurface, renderFlight } from "./render.js";
import { SessionView } from "./state.js";

function wsUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
  const port = params.get("port") ?? (window.location.port || "8001");
  return `ws://${host}:${port}/ws`;
}

function main(): void {
  const canvas = document.getElementById("flight") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d canvas context");
  const surface = new CanvasSurface(ctx, canvas.width, canvas.height);
  const view = new SessionView();

  const client = new TeleopClient(
    wsUrl(),
    {
      onFrame: (frame) => view.handle(frame, performance.now()),
      onConnection: (state) => {
        view.connection = state;
      },
    },
    (url) => new WebSocket(url) as unknown as import("./client.js").SocketLike,
  );
  client.connect();

  const input = new FoldInput((data) => client.send(data), 1000 / 60, () => performance.now());
  window.addEventListener("keydown", (ev) => {
    if (ev.code === "Space") ev.preventDefault();
    input.keyDown(ev.code);
    view.noteCommandSent(-1, performance.now());
  });
  window.addEventListener("keyup", (ev) => input.keyUp(ev.code));
  setInterval(() => input.pump(), 1000 / 60);

  const analogToggle = document.getElementById("analog") as HTMLInputElement;
  const slider = document.getElementById("fold-slider") as HTMLInputElement;
  analogToggle.addEventListener("change", () => {
    slider.disabled = !analogToggle.checked;
    input.setAnalogMode(analogToggle.checked);
  });
  slider.addEventListener("input", () => input.slider(Number(slider.value) / 100));

  for (const action of ["start", "stop", "save", "discard"] as const) {
    const btn = document.getElementById(`btn-${action}`) as HTMLButtonElement;
    btn.addEventListener("click", () => client.send(encodeControl(action)));
  }

  function frame(): void {
    renderFlight(surface, view);
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

main();
