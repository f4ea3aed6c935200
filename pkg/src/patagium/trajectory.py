"""Bezier braking references: pitch/force command profiles with phases 1-4.

The horizontal force profile F_x(t) is a chain of four cubic Bezier
segments: ramp to the peak acceleration at A, back to zero at B (end of
acceleration), down to the peak deceleration at C, and back to zero at D,
followed by a rest window of zero commands.  Force extremes come from the
pitch bounds through F_x = m g tan(theta), and the acceleration /
deceleration durations are split so the net horizontal impulse vanishes
exactly (momentum conservation), which pins the ideal terminal velocity
to zero.  The deceleration is deliberately sharp: phase 3 to phase 4
duration ratio is 1:4.

The pitch reference is theta(t) = atan(F_x / (m g)); its first two time
derivatives are available in closed form for controller feedforward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import GRAVITY, SIM_RATE_HZ
from .errors import InfeasibleRange, OutOfRange

PHASE_REST = 0  # phases are labelled 1..4; 0 marks the rest window


@dataclass
class ReferenceSample:
    theta_ref: float
    theta_ref_rate: float
    theta_ref_acc: float
    F_ref: float  # altitude-equilibrium collective, N
    F_x_ref: float
    phase: int


@dataclass
class ReferenceTrajectory:
    total_time: float
    rest_time: float
    theta_min: float
    theta_max: float
    mass: float
    t_A: float
    t_B: float
    t_C: float
    t_D: float
    segments: list  # (t0, duration, (p0, p1, p2, p3)) Bezier control values for F_x
    sample_rate: float = SIM_RATE_HZ

    @property
    def end_time(self) -> float:
        return self.t_D + self.rest_time

    # -- evaluation ----------------------------------------------------

    def _segment_index(self, t):
        starts = np.array([s[0] for s in self.segments])
        idx = np.searchsorted(starts, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def force_x(self, t):
        """F_x and its first two derivatives at time t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        out_v = np.zeros_like(t)
        out_d = np.zeros_like(t)
        out_dd = np.zeros_like(t)
        inside = t < self.t_D
        ti = np.where(inside, t, 0.0)
        idx = self._segment_index(ti)
        t0 = np.array([self.segments[i][0] for i in idx.flat]).reshape(idx.shape)
        dur = np.array([self.segments[i][1] for i in idx.flat]).reshape(idx.shape)
        ctrl = np.array([self.segments[i][2] for i in idx.flat]).reshape(idx.shape + (4,))
        u = np.clip((ti - t0) / dur, 0.0, 1.0)
        p0, p1, p2, p3 = ctrl[..., 0], ctrl[..., 1], ctrl[..., 2], ctrl[..., 3]
        w = 1.0 - u
        val = p0 * w**3 + 3 * p1 * u * w**2 + 3 * p2 * u**2 * w + p3 * u**3
        der = 3.0 * ((p1 - p0) * w**2 + 2 * (p2 - p1) * u * w + (p3 - p2) * u**2) / dur
        dd = 6.0 * ((p2 - 2 * p1 + p0) * w + (p3 - 2 * p2 + p1) * u) / dur**2
        out_v = np.where(inside, val, 0.0)
        out_d = np.where(inside, der, 0.0)
        out_dd = np.where(inside, dd, 0.0)
        return out_v, out_d, out_dd

    def sample_arrays(self, t):
        """Vectorized reference sampling; returns a dict of arrays."""
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.end_time + 1e-9):
            raise OutOfRange(
                f"sample time outside [0, {self.end_time:.4f}] s"
            )
        fx, dfx, ddfx = self.force_x(t)
        mg = self.mass * GRAVITY
        u = fx / mg
        du = dfx / mg
        ddu = ddfx / mg
        den = 1.0 + u * u
        theta = np.arctan(u)
        theta_rate = du / den
        theta_acc = ddu / den - 2.0 * u * du * du / (den * den)
        f_ref = mg / np.cos(theta)
        phase = np.full(t.shape, PHASE_REST, dtype=int)
        phase = np.where(t < self.t_D, 4, phase)
        phase = np.where(t < self.t_C, 3, phase)
        phase = np.where(t < self.t_B, 2, phase)
        phase = np.where(t < self.t_A, 1, phase)
        return dict(
            theta_ref=theta, theta_ref_rate=theta_rate, theta_ref_acc=theta_acc,
            F_ref=f_ref, F_x_ref=fx, phase=phase,
        )


def build_reference(
    total_time: float,
    theta_min: float,
    theta_max: float,
    mass: float = 0.635,
    rest_time: float = 0.5,
    dec_phase_ratio: float = 4.0,
    acc_phase_ratio: float = 4.0,
) -> ReferenceTrajectory:
    """Construct the four-phase Bezier force/pitch reference.

    The acceleration/deceleration time split balances the impulse exactly:
    with F_max = m g tan(theta_max) and F_min = m g tan(theta_min), both
    halves integrate to duration * extreme / 2, so t_B / (t_D - t_B) =
    -F_min / F_max makes the two cancel in closed form.
    """
    if not (theta_min < 0.0 < theta_max):
        raise InfeasibleRange("need theta_min < 0 < theta_max")
    if abs(theta_min) >= math.pi / 2 or abs(theta_max) >= math.pi / 2:
        raise InfeasibleRange("pitch bounds must stay inside +-90 deg")
    if total_time <= 0.0:
        raise InfeasibleRange("total_time must be positive")
    mg = mass * GRAVITY
    f_hi = mg * math.tan(theta_max)
    f_lo = mg * math.tan(theta_min)
    ratio = -f_lo / f_hi
    t_D = float(total_time)
    t_B = t_D * ratio / (1.0 + ratio)
    t_A = t_B * acc_phase_ratio / (1.0 + acc_phase_ratio)
    t_C = t_B + (t_D - t_B) / (1.0 + dec_phase_ratio)
    segments = [
        (0.0, t_A, (0.0, 0.0, f_hi, f_hi)),
        (t_A, t_B - t_A, (f_hi, f_hi, 0.0, 0.0)),
        (t_B, t_C - t_B, (0.0, 0.0, f_lo, f_lo)),
        (t_C, t_D - t_C, (f_lo, f_lo, 0.0, 0.0)),
    ]
    return ReferenceTrajectory(
        total_time=t_D, rest_time=rest_time, theta_min=theta_min, theta_max=theta_max,
        mass=mass, t_A=t_A, t_B=t_B, t_C=t_C, t_D=t_D, segments=segments,
    )


def sample(traj: ReferenceTrajectory, t: float) -> ReferenceSample:
    """Reference command at time t; raises OutOfRange outside the horizon."""
    arrays = traj.sample_arrays(np.asarray([t], dtype=float))
    return ReferenceSample(
        theta_ref=float(arrays["theta_ref"][0]),
        theta_ref_rate=float(arrays["theta_ref_rate"][0]),
        theta_ref_acc=float(arrays["theta_ref_acc"][0]),
        F_ref=float(arrays["F_ref"][0]),
        F_x_ref=float(arrays["F_x_ref"][0]),
        phase=int(arrays["phase"][0]),
    )


def _segment_grid(traj: ReferenceTrajectory, rate: float):
    """Phase-aligned sampling grid: uniform intervals inside each segment.

    On a uniform grid inside one cubic segment the composite-trapezoid
    error telescopes to -(h^2/12)[F_x'(end) - F_x'(start)], which the
    flat-ended control layout makes exactly zero, so integrating phase by
    phase removes the quadrature bias at the curvature jumps.
    """
    pieces = []
    for t0, dur, _ in traj.segments:
        n = max(1, int(math.ceil(dur * rate)))
        pieces.append(t0 + np.arange(n) * (dur / n))
    pieces.append(np.array([traj.t_D]))
    return np.concatenate(pieces)


def verify_impulse(traj: ReferenceTrajectory, rate: float = SIM_RATE_HZ) -> float:
    """Net horizontal impulse by trapezoid on the phase-aligned grid."""
    grid = _segment_grid(traj, rate)
    fx, _, _ = traj.force_x(grid)
    return float(np.trapezoid(fx, grid))


def ideal_velocity(traj: ReferenceTrajectory, rate: float = SIM_RATE_HZ):
    """Velocity of an ideal point mass following F_x(t) exactly.

    Cumulative trapezoid of F_x / m on the phase-aligned grid; returns
    (times, velocities).
    """
    grid = _segment_grid(traj, rate)
    fx, _, _ = traj.force_x(grid)
    acc = fx / traj.mass
    v = np.concatenate([[0.0], np.cumsum(0.5 * (acc[1:] + acc[:-1]) * np.diff(grid))])
    return grid, v
