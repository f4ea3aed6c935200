"""Teleoperation session server: live slow-motion flight over a websocket.

One client at a time connects to /ws and exchanges JSON text frames:

  server -> client
    {"type": "hello", "schema": 1, "traj": {...}, "slowmo": 0.25}
    {"type": "telemetry", "t": .., "x": .., "y": .., "theta_p_deg": ..,
     "v_x": .., "phase": .., "fold_a": .., "sat_flag": ..}
    {"type": "heartbeat", "t_wall": ..}
    {"type": "ack", "seq": .., "t_sim": ..}         command acknowledged
    {"type": "ack", "control": "start"|...}          control acknowledged
    {"type": "saved", "path": "..."}
    {"type": "state", "status": "idle"|"armed"|"running"|"done"}
    {"type": "error", "message": "..."}

  client -> server
    {"type": "command", "seq": n, "fold_a": 0..1}
    {"type": "control", "action": "start"|"stop"|"save"|"discard"}

The simulation ticks at 240 Hz sim time, paced to wall clock by the
slow-motion factor; commands apply at the next tick (zero-order hold) and
the recording buffer always stores exact 240 Hz sim-time samples, so a
saved session replays headlessly tick for tick.
"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import SIM_DT, Config
from .control import PitchController
from .demos import Provenance, TrajectoryLog, save_log
from .dynamics import EnvBatch
from .errors import StaleSession
from .flight import run_flight
from .trajectory import ReferenceTrajectory, build_reference

SCHEMA = 1


@dataclass
class SessionState:
    session_id: str
    traj: ReferenceTrajectory
    slowmo: float
    status: str = "idle"  # idle -> armed -> running -> done
    fold_command: float = 0.0
    rows: list = field(default_factory=list)
    command_timeline: list = field(default_factory=list)  # (t_sim, fold_a)
    seed: int = 0
    sim_step: int = 0

    @property
    def n_steps(self):
        return int(round(self.traj.end_time / SIM_DT))


class TeleopService:
    """Owns the simulator tick loop and the single active session."""

    def __init__(self, cfg: Config, total_time: float = 2.0, out_dir="sessions", seed: int = 0):
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.traj = build_reference(
            total_time, cfg.experiment.theta_min, cfg.experiment.theta_max,
            mass=cfg.robot.mass, rest_time=cfg.trajectory.rest_time,
            dec_phase_ratio=cfg.trajectory.dec_phase_ratio,
            acc_phase_ratio=cfg.trajectory.acc_phase_ratio,
        )
        self.seed = seed
        self.session: SessionState | None = None
        self.batch = EnvBatch(cfg, n_envs=1, seed=seed)
        self.ctl = PitchController(cfg.robot, cfg.control, 1)
        self.telemetry_queue: asyncio.Queue = asyncio.Queue(maxsize=512)
        self.client_connected = False

    # -- session control -------------------------------------------------

    def new_session(self) -> SessionState:
        sid = f"session_{int(time.time())}_{self.seed}"
        self.session = SessionState(
            session_id=sid, traj=self.traj, slowmo=self.cfg.teleop.slowmo, seed=self.seed
        )
        self.batch.reset(self.seed)
        self.ctl.reset()
        self.session.status = "armed"
        return self.session

    def start(self):
        if self.session is None or self.session.status not in ("armed", "idle"):
            raise StaleSession("no armed session to start")
        if self.session.status == "idle":
            self.new_session()
        self.session.status = "running"

    def stop(self):
        if self.session is None:
            raise StaleSession("no session to stop")
        self.session.status = "done"

    def apply_command(self, fold_a: float, seq=None):
        """Clamp and latch a fold command; applies from the next sim tick."""
        if self.session is None or self.session.status != "running":
            raise StaleSession("no running session")
        clamped = float(np.clip(fold_a, 0.0, 1.0))
        warned = clamped != fold_a
        self.session.fold_command = clamped
        t_sim = self.session.sim_step * SIM_DT
        self.session.command_timeline.append((t_sim, clamped))
        return dict(type="ack", seq=seq, t_sim=t_sim, clamped=warned)

    def tick(self):
        """One 240 Hz sim step of the running session; records telemetry."""
        ses = self.session
        if ses is None or ses.status != "running":
            return None
        t = min(ses.sim_step * SIM_DT, self.traj.end_time)
        ref = self.traj.sample_arrays(np.array([t]))
        cmds, _, _, _ = self.ctl.motor_commands(
            ref, self.batch.theta, self.batch.theta_dot, self.batch.net_prop_speed(), SIM_DT
        )
        info = self.batch.step(cmds, [ses.fold_command])
        ses.rows.append(
            (
                float(self.batch.t[0]), float(self.batch.pos[0, 0]), float(self.batch.pos[0, 1]),
                float(self.batch.theta[0]), ses.fold_command,
                float(ref["theta_ref"][0]), float(ref["F_ref"][0]),
                float(self.batch.vel[0, 0]), int(ref["phase"][0]), bool(np.any(info["sat"])),
            )
        )
        ses.sim_step += 1
        if ses.sim_step >= ses.n_steps:
            ses.status = "done"
        r = ses.rows[-1]
        return dict(
            type="telemetry", t=r[0], x=r[1], y=r[2], theta_p_deg=float(np.degrees(r[3])),
            v_x=r[7], phase=r[8], fold_a=r[4], sat_flag=r[9],
        )

    def to_log(self) -> TrajectoryLog:
        ses = self.session
        if ses is None or not ses.rows:
            raise StaleSession("nothing recorded")
        data = np.asarray([r[:7] for r in ses.rows], dtype=float)
        return TrajectoryLog(
            log_id=ses.session_id,
            t=data[:, 0], x=data[:, 1], y=data[:, 2], theta_p=data[:, 3],
            a=data[:, 4], theta_ref=data[:, 5], F_ref=data[:, 6],
            provenance=Provenance(kind="human", operator="teleop", noise_seed=ses.seed),
            trajectory_total_time=self.traj.total_time,
        ).validate()

    def save(self):
        log = self.to_log()
        path = save_log(log, self.out_dir)
        meta_path = path.with_suffix(".json")
        meta = json.loads(meta_path.read_text())
        meta["command_timeline"] = self.session.command_timeline
        meta["slowmo"] = self.session.slowmo
        meta["seed"] = self.session.seed
        meta_path.write_text(json.dumps(meta, indent=1))
        return path


def replay_command_timeline(cfg: Config, traj: ReferenceTrajectory, timeline, seed: int):
    """Headless deterministic replay of a recorded command timeline.

    Zero-order hold between commands, exactly as the live ticker applied
    them; returns the telemetry dict from the shared flight runner.
    """
    times = np.array([t for t, _ in timeline]) if timeline else np.zeros(0)
    values = np.array([a for _, a in timeline]) if timeline else np.zeros(0)

    def action_fn(i, t, batch, ref):
        if len(times) == 0:
            return np.zeros(batch.n)
        k = np.searchsorted(times, t + 1e-12, side="right") - 1
        return np.full(batch.n, values[k] if k >= 0 else 0.0)

    telemetry, summary = run_flight(cfg, traj, action_fn, seed=seed, record=True)
    return telemetry, summary


def build_app(cfg: Config, total_time: float = 2.0, out_dir="sessions", seed: int = 0) -> FastAPI:
    app = FastAPI(title="patagium teleop")
    service = TeleopService(cfg, total_time=total_time, out_dir=out_dir, seed=seed)
    app.state.service = service

    static_dir = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    if static_dir.exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        if service.client_connected:
            await ws.send_text(json.dumps(dict(type="error", message="another client is connected")))
            await ws.close()
            return
        service.client_connected = True
        service.new_session()
        tick_wall = SIM_DT / cfg.teleop.slowmo
        send_every = max(1, int(round(1.0 / (cfg.teleop.telemetry_rate * tick_wall))))
        recv_q: asyncio.Queue = asyncio.Queue()

        async def reader():
            # socket reads live in their own task; the ticker never blocks on I/O
            try:
                while True:
                    await recv_q.put(await ws.receive_text())
            except WebSocketDisconnect:
                await recv_q.put(None)

        reader_task = asyncio.create_task(reader())
        try:
            await ws.send_text(json.dumps(dict(
                type="hello", schema=SCHEMA, slowmo=cfg.teleop.slowmo,
                traj=dict(total_time=service.traj.total_time, t_A=service.traj.t_A,
                          t_B=service.traj.t_B, t_C=service.traj.t_C, t_D=service.traj.t_D,
                          end_time=service.traj.end_time),
            )))
            await ws.send_text(json.dumps(dict(type="state", status=service.session.status)))
            last_heartbeat = time.monotonic()
            next_tick = time.monotonic()
            ticks = 0
            disconnected = False
            while not disconnected:
                now = time.monotonic()
                if now - last_heartbeat >= cfg.teleop.heartbeat_period:
                    await ws.send_text(json.dumps(dict(type="heartbeat", t_wall=now)))
                    last_heartbeat = now
                while True:
                    try:
                        raw = recv_q.get_nowait()
                    except asyncio.QueueEmpty:
                        break
                    if raw is None:
                        disconnected = True
                        break
                    reply = _handle_frame(service, raw)
                    await ws.send_text(json.dumps(reply))
                    if reply.get("type") == "state":
                        next_tick = time.monotonic()
                if disconnected:
                    break
                if service.session and service.session.status == "running":
                    if now >= next_tick:
                        frame = service.tick()
                        ticks += 1
                        next_tick += tick_wall
                        if frame and ticks % send_every == 0:
                            await ws.send_text(json.dumps(frame))
                        if service.session.status == "done":
                            await ws.send_text(json.dumps(dict(type="state", status="done")))
                    else:
                        await asyncio.sleep(min(tick_wall / 4, max(next_tick - now, 0.0)))
                else:
                    await asyncio.sleep(0.02)
        except WebSocketDisconnect:
            pass
        finally:
            reader_task.cancel()
            service.client_connected = False
            if service.session and service.session.status == "running":
                service.session.status = "done"  # paused; log kept intact

    return app


def _handle_frame(service: TeleopService, raw: str) -> dict:
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError:
        return dict(type="error", message="malformed JSON frame")
    kind = msg.get("type")
    try:
        if kind == "command":
            return service.apply_command(float(msg.get("fold_a", 0.0)), seq=msg.get("seq"))
        if kind == "control":
            action = msg.get("action")
            if action == "start":
                service.start()
            elif action == "stop":
                service.stop()
            elif action == "save":
                path = service.save()
                return dict(type="saved", path=str(path))
            elif action == "discard":
                service.new_session()
            else:
                return dict(type="error", message=f"unknown control action {action!r}")
            return dict(type="state", status=service.session.status, control=action)
        return dict(type="error", message=f"unknown frame type {kind!r}")
    except StaleSession as exc:
        return dict(type="error", message=str(exc))
