"""Flat-plate membrane aerodynamics.

Coefficients follow thin-plate theory,

    C_L = 2 sin(a) cos(a),   C_D = 2 sin^2(a),

with ``a`` the angle between the free-stream velocity and the wing plane
(equal to body pitch for horizontal flow).  Forces are the standard
dynamic-pressure laws F = 1/2 rho C A v^2, drag anti-parallel to the
velocity and lift perpendicular to it in the pitch plane.  Per-episode
multiplicative randomization of both coefficients models sim-to-real
spread, and the membrane's centre of gravity retreats as the wing opens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class AeroCoeffs:
    C_L: float
    C_D: float
    scale_L: float = 1.0
    scale_R: float = 1.0


@dataclass
class AeroForces:
    F_L: np.ndarray  # lift vector, world frame, N
    F_D: np.ndarray  # drag vector, world frame, N
    application_point: np.ndarray
    airspeed: float
    rho_air: float


def flat_plate_coeffs(theta_p: float) -> AeroCoeffs:
    """Thin-plate lift/drag coefficients at angle of attack theta_p."""
    s, c = math.sin(theta_p), math.cos(theta_p)
    return AeroCoeffs(C_L=2.0 * s * c, C_D=2.0 * s * s)


def aero_force_vectors(alpha, area, velocity, rho, lift_enabled=True, drag_scale=1.0, lift_scale=1.0):
    """Vectorized lift/drag world-frame force components for the planar model.

    alpha: angle of attack (wing plane vs free stream), rad
    velocity: (..., 2) world velocity
    Returns (force_x, force_y) arrays.  Zero airspeed or zero area gives zero force.
    """
    vx, vy = velocity[..., 0], velocity[..., 1]
    speed2 = vx * vx + vy * vy
    speed = np.sqrt(speed2)
    q = 0.5 * rho * area * speed2
    c_d = 2.0 * np.sin(alpha) ** 2 * drag_scale
    c_l = (2.0 * np.sin(alpha) * np.cos(alpha) * lift_scale) if lift_enabled else 0.0
    inv = np.where(speed > 0.0, 1.0 / np.maximum(speed, 1e-300), 0.0)
    ux, uy = vx * inv, vy * inv
    # drag opposes the velocity; lift is the +90 deg rotation of the flow direction
    fx = -q * c_d * ux + q * c_l * (-uy)
    fy = -q * c_d * uy + q * c_l * ux
    return fx, fy


def aero_forces(coeffs: AeroCoeffs, area: float, velocity, rho: float) -> AeroForces:
    """Lift and drag force vectors for one wing at the given coefficients."""
    v = np.asarray(velocity, dtype=float)
    speed = float(np.hypot(v[0], v[1]))
    q = 0.5 * rho * max(area, 0.0) * speed * speed
    if speed == 0.0 or q == 0.0:
        zero = np.zeros(2)
        return AeroForces(zero, zero.copy(), np.zeros(2), 0.0, rho)
    u = v / speed
    drag = -q * coeffs.C_D * coeffs.scale_R * u
    lift = q * coeffs.C_L * coeffs.scale_L * np.array([-u[1], u[0]])
    return AeroForces(F_L=lift, F_D=drag, application_point=np.zeros(2), airspeed=speed, rho_air=rho)


def randomize_coeffs(rng: np.random.Generator, band: float, n: int = 1):
    """Per-episode multiplicative scales, uniform in [1-band, 1+band].

    Held constant within an episode; deterministic for a given generator
    state.  Returns (scale_L, scale_R) arrays of length n.
    """
    if not 0.0 <= band <= 0.5:
        raise ValueError(f"randomization band {band} outside [0, 0.5]")
    scale_l = rng.uniform(1.0 - band, 1.0 + band, size=n)
    scale_r = rng.uniform(1.0 - band, 1.0 + band, size=n)
    return scale_l, scale_r


def membrane_cog_offset(fold: float, retreat: float = 0.0276):
    """Membrane CoG x-offset: 0 folded, -retreat fully unfolded (body frame)."""
    a = np.clip(fold, 0.0, 1.0)
    return -retreat * a


def body_cog_offset(fold: float, membrane_mass: float, total_mass: float, retreat: float = 0.0276):
    """Whole-body CoG x-shift from the membrane retreat, mass-weighted."""
    return membrane_cog_offset(fold, retreat) * (membrane_mass / total_mass)
