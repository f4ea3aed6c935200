"""Planar rigid-body quadrotor simulator with foldable wings, 240 Hz fixed step.

State per environment: horizontal position x, altitude y, pitch theta
(tilt of the thrust axis toward +x; F_x = U_F sin theta), world-frame
velocities, pitch rate, four motor thrusts (after first-order lag), servo
angle, and the previous wing action.  Integration is semi-implicit Euler.

Conventions (documented prominently because the inertia table uses z-up
naming): y is the gravity-opposing axis, x the travel axis.  Motors are
numbered so that pair (1,4) carries pitch arm d_fp and pair (2,3) carries
d_bp in the allocation matrix; with a positive pitch torque the (1,4)
pair's side rises and the thrust axis tips toward +x.  The membrane and
whole-body CoG retreat toward the sinking side as the wings open, which
enters the pitch dynamics as a torque arm on the collective thrust.

The wing membrane contributes aerodynamic plate area equal to its current
polygon area minus the folded-state area, so a folded drone is exactly
the nominal wing-less quadrotor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aero import aero_force_vectors, body_cog_offset, randomize_coeffs
from .config import GRAVITY, SIM_DT, Config
from .errors import NumericalDivergence
from .wing import AreaTable

STATE_BOUND_VEL = 200.0
STATE_BOUND_POS = 1.0e4


@dataclass
class SimState:
    """Full state of one simulated drone at one tick."""

    x: float = 0.0
    y: float = 0.0
    theta_p: float = 0.0
    v_x: float = 0.0
    v_y: float = 0.0
    theta_dot: float = 0.0
    motor_thrusts: np.ndarray = field(default_factory=lambda: np.zeros(4))
    servo: float = 0.0
    fold: float = 0.0
    t: float = 0.0
    prev_action: float = 0.0


def saturate(cmd, f_max: float):
    """Clamp motor commands to [0, f_max]; returns (clamped, sat_flags)."""
    cmd = np.asarray(cmd, dtype=float)
    clamped = np.clip(cmd, 0.0, f_max)
    return clamped, (cmd < 0.0) | (cmd > f_max)


def servo_step(current, target, rate_limit: float, dt: float):
    """Slew-limited servo motion toward the target angle."""
    delta = np.clip(target - current, -rate_limit * dt, rate_limit * dt)
    return current + delta


class EnvBatch:
    """N independent simulated drones stepped in lockstep.

    Each environment owns its RNG stream and per-episode aerodynamic
    randomization scales; stepping environment i never reads another
    environment's state, so results are independent of N-batching.
    """

    def __init__(self, cfg: Config, n_envs: int = 1, seed: int = 0, area_table: AreaTable | None = None):
        self.cfg = cfg
        self.n = int(n_envs)
        self.params = cfg.robot
        self.area_table = area_table if area_table is not None else AreaTable(cfg.wing.geometry())
        self.servo_rate = (cfg.wing.servo_max - cfg.wing.servo_min) / cfg.robot.servo_full_travel_time
        self._alloc_arrays()
        self.reset(seed)

    def _alloc_arrays(self):
        n = self.n
        self.pos = np.zeros((n, 2))
        self.vel = np.zeros((n, 2))
        self.theta = np.zeros(n)
        self.theta_dot = np.zeros(n)
        self.motors = np.zeros((n, 4))
        self.servo = np.zeros(n)
        self.t = np.zeros(n)
        self.prev_action = np.zeros(n)
        self.scale_lift = np.ones(n)
        self.scale_drag = np.ones(n)

    def reset(self, seed: int = 0):
        """Hover initial state with fresh per-env aero randomization."""
        ss = np.random.SeedSequence(seed)
        self.rngs = [np.random.default_rng(s) for s in ss.spawn(self.n)]
        self.pos[:] = 0.0
        self.vel[:] = 0.0
        self.theta[:] = 0.0
        self.theta_dot[:] = 0.0
        self.motors[:] = self.params.mass * GRAVITY / 4.0
        self.servo[:] = self.cfg.wing.servo_min
        self.t[:] = 0.0
        self.prev_action[:] = 0.0
        band = self.cfg.aero.randomization_band
        for i, rng in enumerate(self.rngs):
            sl, sr = randomize_coeffs(rng, band, 1)
            self.scale_lift[i] = sl[0]
            self.scale_drag[i] = sr[0]
        return self

    def new_episode(self):
        """Zero the state and redraw aero randomization for the next episode.

        The per-env RNG streams continue, so successive episodes see fresh
        but reproducible randomization (unlike reset(), which rewinds them).
        """
        self.pos[:] = 0.0
        self.vel[:] = 0.0
        self.theta[:] = 0.0
        self.theta_dot[:] = 0.0
        self.motors[:] = self.params.mass * GRAVITY / 4.0
        self.servo[:] = self.cfg.wing.servo_min
        self.t[:] = 0.0
        self.prev_action[:] = 0.0
        band = self.cfg.aero.randomization_band
        for i, rng in enumerate(self.rngs):
            sl, sr = randomize_coeffs(rng, band, 1)
            self.scale_lift[i] = sl[0]
            self.scale_drag[i] = sr[0]
        return self

    # -- helpers -------------------------------------------------------

    def fold_fraction(self):
        w = self.cfg.wing
        return np.clip((self.servo - w.servo_min) / (w.servo_max - w.servo_min), 0.0, 1.0)

    def effective_area(self):
        # both wings, commanded identically
        return 2.0 * self.area_table.effective_area(self.servo)

    def net_prop_speed(self):
        """Net signed propeller speed for the gyroscopic feedforward."""
        omega = np.sqrt(np.maximum(self.motors, 0.0) / self.params.prop_thrust_const)
        return -omega[:, 0] + omega[:, 1] - omega[:, 2] + omega[:, 3]

    def step(self, motor_cmd, fold_cmd, dt: float = SIM_DT):
        """Advance one tick; returns a dict with saturation flags and forces."""
        p = self.params
        motor_cmd = np.asarray(motor_cmd, dtype=float).reshape(self.n, 4)
        fold_cmd = np.clip(np.asarray(fold_cmd, dtype=float).reshape(self.n), 0.0, 1.0)

        cmd, sat = saturate(motor_cmd, p.f_max)
        lag = 1.0 - np.exp(-dt / p.motor_tau)
        self.motors = self.motors + lag * (cmd - self.motors)

        w = self.cfg.wing
        servo_target = w.servo_min + fold_cmd * (w.servo_max - w.servo_min)
        self.servo = servo_step(self.servo, servo_target, self.servo_rate, dt)
        fold = self.fold_fraction()

        thrust = self.motors.sum(axis=1)
        b_up = np.stack([np.sin(self.theta), np.cos(self.theta)], axis=-1)
        f_thrust = thrust[:, None] * b_up
        f_gravity = np.zeros((self.n, 2))
        f_gravity[:, 1] = -p.mass * GRAVITY

        area = self.effective_area()
        flow_angle = np.where(
            np.hypot(self.vel[:, 0], self.vel[:, 1]) > 0.0,
            np.arctan2(self.vel[:, 1], self.vel[:, 0]),
            0.0,
        )
        alpha = self.theta - flow_angle
        fa_x, fa_y = aero_force_vectors(
            alpha, area, self.vel, self.cfg.aero.rho_air,
            lift_enabled=self.cfg.aero.lift_enabled,
            drag_scale=self.scale_drag, lift_scale=self.scale_lift,
        )
        f_aero = np.stack([fa_x, fa_y], axis=-1)

        # pitch torque about the (fold-dependent) CoM, tilt-positive sense
        tau_motor = p.d_fp * (self.motors[:, 0] + self.motors[:, 3]) - p.d_bp * (
            self.motors[:, 1] + self.motors[:, 2]
        )
        delta_com = body_cog_offset(fold, self.cfg.aero.membrane_mass, p.mass, self.cfg.aero.cog_retreat)
        tau_cog = delta_com * thrust
        arm_aero = -self.cfg.aero.membrane_center_retreat * fold - delta_com
        tau_aero = -arm_aero * (f_aero * b_up).sum(axis=-1)
        tau = tau_motor + tau_cog + tau_aero

        acc = (f_thrust + f_gravity + f_aero) / p.mass
        self.vel = self.vel + acc * dt
        self.pos = self.pos + self.vel * dt
        self.theta_dot = self.theta_dot + (tau / p.I_yy) * dt
        self.theta = self.theta + self.theta_dot * dt
        self.t = self.t + dt
        self.prev_action = fold_cmd

        if not (
            np.all(np.isfinite(self.vel))
            and np.all(np.isfinite(self.pos))
            and np.all(np.isfinite(self.theta))
        ):
            raise NumericalDivergence("non-finite simulator state")
        if np.any(np.abs(self.vel) > STATE_BOUND_VEL) or np.any(np.abs(self.pos) > STATE_BOUND_POS):
            raise NumericalDivergence("state magnitude exceeded configured bounds")
        return dict(sat=sat, f_aero=f_aero, thrust=thrust, tau=tau, area=area)

    def observe(self, ref_arrays):
        """12-state observation per env, planar entries zeroed.

        Layout: [v_x, v_y, v_z, w_x, w_y, w_z, g_x, g_y, g_z,
                 theta_ref, F_ref, prev_action], gravity direction in the
        body frame (unit norm).
        """
        z = np.zeros(self.n)
        g_x = np.sin(self.theta)
        g_y = -np.cos(self.theta)
        return np.stack(
            [
                self.vel[:, 0], self.vel[:, 1], z,
                z, z, self.theta_dot,
                g_x, g_y, z,
                np.broadcast_to(ref_arrays["theta_ref"], (self.n,)),
                np.broadcast_to(ref_arrays["F_ref"], (self.n,)),
                self.prev_action,
            ],
            axis=-1,
        )

    # -- single-environment views ---------------------------------------

    def get_state(self, i: int = 0) -> SimState:
        return SimState(
            x=float(self.pos[i, 0]), y=float(self.pos[i, 1]),
            theta_p=float(self.theta[i]),
            v_x=float(self.vel[i, 0]), v_y=float(self.vel[i, 1]),
            theta_dot=float(self.theta_dot[i]),
            motor_thrusts=self.motors[i].copy(),
            servo=float(self.servo[i]), fold=float(self.fold_fraction()[i]),
            t=float(self.t[i]), prev_action=float(self.prev_action[i]),
        )

    def set_state(self, state: SimState, i: int = 0):
        self.pos[i] = (state.x, state.y)
        self.vel[i] = (state.v_x, state.v_y)
        self.theta[i] = state.theta_p
        self.theta_dot[i] = state.theta_dot
        self.motors[i] = state.motor_thrusts
        self.servo[i] = state.servo
        self.t[i] = state.t
        self.prev_action[i] = state.prev_action
        return self


def step(state: SimState, motor_cmd, fold_cmd, cfg: Config, dt: float = SIM_DT,
         batch: EnvBatch | None = None) -> SimState:
    """Functional single-drone step (thin wrapper over a one-env batch)."""
    if batch is None:
        batch = EnvBatch(cfg, n_envs=1)
    batch.set_state(state, 0)
    batch.step(np.asarray(motor_cmd, dtype=float).reshape(1, 4), [fold_cmd], dt)
    return batch.get_state(0)
