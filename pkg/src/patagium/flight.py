"""Closed-loop flight runner: nominal controller + wing action source.

Used by the scripted demonstrator, the experiment harness, and teleop
replays.  The wing action source is any callable mapping (step index,
sim time, EnvBatch, reference arrays) to per-env fold commands; the
quadrotor controller itself always runs the nominal integral-backstepping
stack.
"""

from __future__ import annotations

import numpy as np

from .config import SIM_DT, Config
from .control import PitchController
from .dynamics import EnvBatch
from .trajectory import ReferenceTrajectory

TELEMETRY_COLUMNS = [
    "t", "x", "y", "theta_p", "v_x", "v_y", "theta_dot",
    "F1", "F2", "F3", "F4", "servo_rad", "fold_a",
    "sat1", "sat2", "sat3", "sat4",
    "theta_ref", "F_ref", "F_x_ref", "phase",
    "U_F", "U_p", "ctl_integral",
]


def constant_action(value: float):
    def fn(i, t, batch, ref):
        return np.full(batch.n, value)
    return fn


def schedule_action(unfold_time: float, fold_time: float):
    """Binary wing schedule: unfolded on [unfold_time, fold_time), else folded."""

    def fn(i, t, batch, ref):
        a = 1.0 if unfold_time <= t < fold_time else 0.0
        return np.full(batch.n, a)

    return fn


def run_flight(
    cfg: Config,
    traj: ReferenceTrajectory,
    action_fn,
    seed: int = 0,
    n_envs: int = 1,
    record: bool = True,
    batch: EnvBatch | None = None,
    record_from: float = 0.0,
):
    """Run one full episode; returns (telemetry dict of arrays, summary).

    Telemetry rows start at ``record_from`` (sim time), at exactly 240 Hz.
    The summary carries v_B (velocity when crossing the end of the
    acceleration phase), v_E (terminal velocity), delta_v = v_B - |v_E|,
    and the motor saturation duty cycle, all for env 0.
    """
    if batch is None:
        batch = EnvBatch(cfg, n_envs=n_envs, seed=seed)
    else:
        batch.reset(seed)
    ctl = PitchController(cfg.robot, cfg.control, batch.n)
    n_steps = int(round(traj.end_time / SIM_DT))
    rows = [] if record else None
    v_b = None
    sat_ticks = 0
    for i in range(n_steps):
        t = min(i * SIM_DT, traj.end_time)
        ref = traj.sample_arrays(np.array([t]))
        actions = np.clip(np.asarray(action_fn(i, t, batch, ref), dtype=float), 0.0, 1.0)
        cmds, u_f, u_p, sat_cmd = ctl.motor_commands(
            ref, batch.theta, batch.theta_dot, batch.net_prop_speed(), SIM_DT
        )
        info = batch.step(cmds, actions)
        sat = info["sat"]
        sat_ticks += int(np.any(sat[0]))
        if v_b is None and t + SIM_DT >= traj.t_B:
            v_b = float(batch.vel[0, 0])
        if record and t + SIM_DT / 2 >= record_from:
            rows.append(
                [
                    float(batch.t[0]), float(batch.pos[0, 0]), float(batch.pos[0, 1]),
                    float(batch.theta[0]), float(batch.vel[0, 0]), float(batch.vel[0, 1]),
                    float(batch.theta_dot[0]),
                    *[float(v) for v in batch.motors[0]],
                    float(batch.servo[0]), float(actions[0]),
                    *[float(v) for v in sat[0]],
                    float(ref["theta_ref"][0]), float(ref["F_ref"][0]),
                    float(ref["F_x_ref"][0]), float(ref["phase"][0]),
                    float(u_f[0]), float(u_p[0]), float(ctl.integral[0]),
                ]
            )
    v_e = float(batch.vel[0, 0])
    summary = dict(
        v_B=v_b if v_b is not None else float("nan"),
        v_E=v_e,
        delta_v=(v_b - abs(v_e)) if v_b is not None else float("nan"),
        sat_duty=sat_ticks / n_steps,
        sat_time=sat_ticks * SIM_DT,
    )
    telemetry = None
    if record:
        data = np.asarray(rows, dtype=float)
        telemetry = {name: data[:, k] for k, name in enumerate(TELEMETRY_COLUMNS)}
    return telemetry, summary


def write_telemetry_csv(telemetry: dict, path):
    data = np.stack([telemetry[c] for c in TELEMETRY_COLUMNS], axis=-1)
    header = ",".join(TELEMETRY_COLUMNS)
    np.savetxt(path, data, delimiter=",", header=header, comments="")
