"""Integral backstepping pitch control, altitude thrust, and motor allocation.

The pitch torque follows the Lyapunov-based integral backstepping law: with
pitch error e = theta_d - theta, its integral chi, and the angular-velocity
tracking error e2 = k1 e + k2 chi + (theta_dot_d - theta_dot) measured
against the virtual velocity reference,

    U_p = I_yy [ (1 - k1^2 + k2) e + (k1 + k3) e2 - k1 k2 chi
                 + theta_ddot_d - theta_dot_r theta_dot_y (I_zz - I_xx)/I_yy
                 + (J_R / I_yy) theta_dot_p Omega ]

which expands to positive position/rate/integral gains
(1 + k2 + k1 k3, k1 + k3, k2 k3) and is asymptotically stable for
k1, k3 > 0, k2 >= 0.  In the planar model the roll/yaw rates vanish, so
the cross-coupling term is zero; the gyroscopic feedforward keeps the
rotor-inertia term with Omega taken from the net signed propeller speed.

Thrust allocation maps U = [U_F, U_r, U_p, U_y] to per-motor forces via
the mixer matrix T (motors ordered front-left, back-left, back-right,
front-right); its pitch row uses the front/back pitch arms d_fp, d_bp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GRAVITY, ControlConfig, RobotConfig
from .errors import PitchSingularity, SingularAllocation


@dataclass
class ControlGains:
    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        if self.k1 <= 0.0 or self.k3 <= 0.0 or self.k2 < 0.0:
            raise ValueError("backstepping requires k1, k3 > 0 and k2 >= 0")


@dataclass
class ControlOutput:
    U_F: float
    U_r: float
    U_p: float
    U_y: float
    motor_thrusts: np.ndarray  # pre-saturation, N
    sat_any: bool


def mixer_matrix(params: RobotConfig) -> np.ndarray:
    """Thrust-to-wrench matrix T with rows (collective, roll, pitch, yaw)."""
    return np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [params.d_fr, params.d_br, -params.d_br, -params.d_fr],
            [params.d_fp, -params.d_bp, -params.d_bp, params.d_fp],
            [-params.ct_1, params.ct_2, -params.ct_1, params.ct_2],
        ]
    )


def allocate(U, params: RobotConfig) -> np.ndarray:
    """Per-motor thrusts F = T^-1 U (pre-saturation)."""
    T = mixer_matrix(params)
    det = np.linalg.det(T)
    if abs(det) < 1e-12:
        raise SingularAllocation(f"mixer determinant {det:.3e} below threshold")
    return np.linalg.solve(T, np.asarray(U, dtype=float))


def altitude_force(theta_p, mass: float, max_tilt: float = np.radians(80.0)):
    """Collective U_F = m g / cos(theta) balancing gravity at the current tilt.

    The divisor is clamped at the configured maximum tilt; at |theta| >=
    90 deg no finite thrust balances gravity.
    """
    theta = np.asarray(theta_p, dtype=float)
    if np.any(np.abs(theta) >= np.pi / 2):
        raise PitchSingularity("no finite vertical-equilibrium thrust at |pitch| >= 90 deg")
    eff = np.minimum(np.abs(theta), max_tilt)
    out = mass * GRAVITY / np.cos(eff)
    return float(out) if np.isscalar(theta_p) else out


def pitch_errors(ref_theta, ref_rate, theta, theta_rate):
    """(e_p, e_dp): pitch and pitch-rate tracking errors."""
    return ref_theta - theta, ref_rate - theta_rate


def pitch_torque(e_p, e_dp, integ, ref_acc, theta_rate, omega, params: RobotConfig, gains: ControlGains):
    """Backstepping pitch torque (vectorized over environments)."""
    k1, k2, k3 = gains.k1, gains.k2, gains.k3
    e2 = k1 * e_p + k2 * integ + e_dp
    gyro = (params.rotor_inertia / params.I_yy) * theta_rate * omega
    return params.I_yy * (
        (1.0 - k1 * k1 + k2) * e_p + (k1 + k3) * e2 - k1 * k2 * integ + ref_acc + gyro
    )


class PitchController:
    """Per-environment integral state plus anti-windup.

    Holds the running pitch-error integral for a batch of environments;
    the integral freezes while any motor in that environment saturates so
    sustained saturation cannot wind it up.
    """

    def __init__(self, params: RobotConfig, gains_cfg: ControlConfig, n_envs: int = 1):
        self.params = params
        self.gains = ControlGains(gains_cfg.k1, gains_cfg.k2, gains_cfg.k3)
        self.integral = np.zeros(n_envs)

    def reset(self, env_mask=None):
        if env_mask is None:
            self.integral[:] = 0.0
        else:
            self.integral[env_mask] = 0.0

    def motor_commands(self, ref, theta, theta_rate, omega, dt: float):
        """Motor thrust commands for reference dicts/arrays; updates integral.

        ref carries theta_ref / theta_ref_rate / theta_ref_acc / F_ref
        arrays.  Returns (commands (n, 4), U_F, U_p, sat_flags (n, 4)).
        """
        p = self.params
        e_p, e_dp = pitch_errors(ref["theta_ref"], ref["theta_ref_rate"], theta, theta_rate)
        # beyond the max-tilt clamp no finite thrust balances gravity; hold the
        # clamped equilibrium value so the loop survives transient tumbles
        u_f = altitude_force(np.clip(theta, -p.max_tilt, p.max_tilt), p.mass, p.max_tilt)
        u_p = pitch_torque(e_p, e_dp, self.integral, ref["theta_ref_acc"], theta_rate, omega, p, self.gains)
        T_inv = np.linalg.inv(mixer_matrix(p))
        U = np.stack([u_f, np.zeros_like(u_f), u_p, np.zeros_like(u_f)], axis=-1)
        cmds = U @ T_inv.T
        sat = (cmds < 0.0) | (cmds > p.f_max)
        free = ~np.any(sat, axis=-1)
        self.integral = self.integral + np.where(free, e_p * dt, 0.0)
        return cmds, u_f, u_p, sat
