"""Flat-plate coefficient identities and force laws."""

import math

import numpy as np
import pytest

from patagium.aero import (
    aero_forces,
    body_cog_offset,
    flat_plate_coeffs,
    membrane_cog_offset,
    randomize_coeffs,
)


@pytest.mark.parametrize(
    "theta, cl, cd",
    [(0.0, 0.0, 0.0), (math.pi / 4, 1.0, 1.0), (math.pi / 2, 0.0, 2.0)],
)
def test_coeffs_reference_angles(theta, cl, cd):
    c = flat_plate_coeffs(theta)
    assert abs(c.C_L - cl) < 1e-15
    assert abs(c.C_D - cd) < 1e-15


def test_coeffs_unit_circle_identity():
    # C_L, C_D parameterize a unit circle centred at C_D = 1
    for theta in np.linspace(-2 * math.pi, 2 * math.pi, 2001):
        c = flat_plate_coeffs(float(theta))
        assert abs(c.C_L**2 + (c.C_D - 1.0) ** 2 - 1.0) < 1e-12


def test_drag_magnitude_hand_value():
    # rho = 1.23, C_D = 2, A = 0.05 m^2, v = 3 m/s -> F_D = 0.5535 N
    c = flat_plate_coeffs(math.pi / 2)
    f = aero_forces(c, 0.05, (3.0, 0.0), 1.23)
    assert abs(np.linalg.norm(f.F_D) - 0.5535) < 1e-12
    assert f.F_D[0] < 0.0  # opposes the velocity


def test_zero_velocity_zero_force():
    c = flat_plate_coeffs(0.7)
    f = aero_forces(c, 0.05, (0.0, 0.0), 1.23)
    assert np.all(f.F_D == 0.0) and np.all(f.F_L == 0.0)


def test_velocity_quadratic_scaling():
    c = flat_plate_coeffs(0.5)
    f1 = aero_forces(c, 0.04, (2.0, 1.0), 1.23)
    f2 = aero_forces(c, 0.04, (4.0, 2.0), 1.23)
    assert np.allclose(f2.F_D, 4.0 * f1.F_D, rtol=1e-12)
    assert np.allclose(f2.F_L, 4.0 * f1.F_L, rtol=1e-12)


def test_linear_scaling_in_area_and_coeffs():
    c = flat_plate_coeffs(0.5)
    base = aero_forces(c, 0.04, (3.0, -1.0), 1.23)
    double_area = aero_forces(c, 0.08, (3.0, -1.0), 1.23)
    assert np.allclose(double_area.F_D, 2.0 * base.F_D, rtol=1e-12)
    scaled = aero_forces(
        flat_plate_coeffs(0.5).__class__(C_L=c.C_L, C_D=c.C_D, scale_L=1.0, scale_R=1.5),
        0.04, (3.0, -1.0), 1.23,
    )
    assert np.allclose(scaled.F_D, 1.5 * base.F_D, rtol=1e-12)


def test_drag_never_adds_kinetic_energy():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.normal(0, 5, 2)
        c = flat_plate_coeffs(rng.uniform(-math.pi, math.pi))
        f = aero_forces(c, 0.05, v, 1.23)
        assert float(f.F_D @ v) <= 1e-12


def test_randomization_band_zero():
    sl, sr = randomize_coeffs(np.random.default_rng(0), 0.0, 5)
    assert np.all(sl == 1.0) and np.all(sr == 1.0)


def test_randomization_deterministic_per_seed():
    a = randomize_coeffs(np.random.default_rng(42), 0.2, 8)
    b = randomize_coeffs(np.random.default_rng(42), 0.2, 8)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_randomization_mean():
    sl, sr = randomize_coeffs(np.random.default_rng(7), 0.2, 10_000)
    assert abs(sl.mean() - 1.0) < 0.01
    assert abs(sr.mean() - 1.0) < 0.01
    assert np.all(sl >= 0.8) and np.all(sl <= 1.2)


def test_cog_offsets():
    assert membrane_cog_offset(0.0) == 0.0
    assert abs(membrane_cog_offset(1.0) - (-0.0276)) < 1e-15
    body = body_cog_offset(1.0, membrane_mass=0.046, total_mass=0.635)
    assert abs(body - (-0.0276 * 0.046 / 0.635)) < 1e-15
    assert abs(body - (-0.0020)) < 1e-4
