"""Wing linkage kinematics against an independent loop-closure solver."""

import math

import numpy as np
import pytest

from patagium.config import WingConfig
from patagium.errors import NoRealSolution, TooFewPoints
from patagium.wing import (
    FoldCommand,
    LinkageGeometry,
    fold_to_servo,
    freudenstein_residual,
    membrane_points,
    polygon_area,
    servo_to_fold,
    slider_position,
    solve_output_angle,
    wing_polygon,
)


def newton_loop_closure(geom, theta0, thetaB_guess):
    """2-D Newton on the rocker-tip coordinates; independent of Freudenstein.

    Unknown B = (x, y) satisfies |B - G|^2 = r4^2 and |B - A|^2 = r3^2
    with the crank tip A known from theta0.
    """
    A = geom.crank_tip(theta0)
    G = geom.rocker_pivot
    B = G + geom.r4 * geom._linkage_dir(thetaB_guess)
    for _ in range(60):
        f = np.array(
            [
                (B - G) @ (B - G) - geom.r4**2,
                (B - A) @ (B - A) - geom.r3**2,
            ]
        )
        J = np.array([2.0 * (B - G), 2.0 * (B - A)])
        step = np.linalg.solve(J, f)
        B = B - step
        if np.max(np.abs(f)) < 1e-15:
            break
    rel = np.linalg.inv(geom._ground_rot) @ (B - G)
    return math.atan2(rel[1], rel[0])


def wrapped_diff(a, b):
    return abs((a - b + math.pi) % (2.0 * math.pi) - math.pi)


def default_geometry():
    return WingConfig().geometry()


def test_parallelogram_linkage_output_equals_input():
    geom = LinkageGeometry(r1=0.10, r2=0.04, r3=0.10, r4=0.04,
                           servo_min=math.radians(20), servo_max=math.radians(150))
    th = math.radians(30)
    out = solve_output_angle(geom, th)
    assert abs(out - th) < 1e-12
    # the independent solver lands on the same parallel-crank assembly
    oracle = newton_loop_closure(geom, th, out + 0.05)
    assert abs(oracle - th) < 1e-9


def test_generic_linkage_matches_loop_closure_oracle():
    geom = LinkageGeometry(r1=0.08, r2=0.03, r3=0.07, r4=0.035,
                           servo_min=math.radians(20), servo_max=math.radians(120))
    guess = solve_output_angle(geom, geom.servo_min)
    for th in np.linspace(geom.servo_min, geom.servo_max, 200):
        out = solve_output_angle(geom, float(th))
        oracle = newton_loop_closure(geom, float(th), guess)
        assert wrapped_diff(out, oracle) < 1e-9
        guess = oracle  # continuation keeps the oracle on the same branch


def test_infeasible_angle_raises():
    geom = LinkageGeometry(r1=0.08, r2=0.03, r3=0.07, r4=0.035,
                           servo_min=math.radians(20), servo_max=math.radians(120))
    with pytest.raises(NoRealSolution):
        solve_output_angle(geom, math.radians(181.0))


def test_loop_closure_residual_default_geometry():
    geom = default_geometry()
    for th in np.linspace(geom.servo_min, geom.servo_max, 1000):
        out = solve_output_angle(geom, float(th))
        assert abs(freudenstein_residual(geom, float(th), out)) < 1e-9


def test_sliders_monotone_and_deterministic():
    geom = default_geometry()
    thetas = np.linspace(geom.servo_min, geom.servo_max, 400)
    df = np.array([math.cos(geom.arm_front_angle), math.sin(geom.arm_front_angle)])
    db = np.array([math.cos(geom.arm_back_angle), math.sin(geom.arm_back_angle)])
    sf, sb = [], []
    for th in thetas:
        pf, pb = slider_position(geom, float(th))
        sf.append(float((pf - geom.mount_points["front_hub"]) @ df))
        sb.append(float((pb - geom.mount_points["back_hub"]) @ db))
    assert np.all(np.diff(sf) > 0)
    assert np.all(np.diff(sb) > 0)
    again = slider_position(geom, float(thetas[17]))
    first = slider_position(geom, float(thetas[17]))
    assert np.array_equal(again[0], first[0]) and np.array_equal(again[1], first[1])


def test_folded_slider_matches_closed_form():
    geom = default_geometry()
    pf, pb = slider_position(geom, geom.servo_min)
    # closed form: intersection of the coupler circle with the arm ray
    pts = membrane_points(geom, geom.servo_min)
    for joint, hub_key, ang, L, slider in [
        (pts[11], "front_hub", geom.arm_front_angle, geom.coupler_front, pf),
        (pts[12], "back_hub", geom.arm_back_angle, geom.coupler_back, pb),
    ]:
        hub = geom.mount_points[hub_key]
        d = np.array([math.cos(ang), math.sin(ang)])
        w = joint - hub
        proj = float(d @ w)
        s = proj + math.sqrt(proj * proj - float(w @ w) + L * L)
        assert np.allclose(hub + s * d, slider, atol=1e-12)


def test_polygon_counts_at_range_ends():
    geom = default_geometry()
    assert wing_polygon(geom, geom.servo_min).n_vertices == 10   # folded: decagon
    assert wing_polygon(geom, geom.servo_max).n_vertices == 8    # unfolded: octagon


def test_front_knee_collinearity_transition():
    geom = default_geometry()

    def knee_line_distance(th):
        pts = membrane_points(geom, th)
        chord = pts[4] - pts[1]
        cross = chord[0] * (pts[3] - pts[1])[1] - chord[1] * (pts[3] - pts[1])[0]
        return cross / np.linalg.norm(chord)

    lo, hi = geom.servo_min, geom.servo_max
    assert knee_line_distance(lo) < 0 < knee_line_distance(hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if knee_line_distance(mid) < 0:
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)
    assert abs(knee_line_distance(t_star)) < 1e-9  # points 1, 3, 4 on one line


def test_polygon_simple_over_sweep():
    def xp(u, v):
        return u[0] * v[1] - u[1] * v[0]

    def segments_cross(p1, p2, p3, p4):
        d1 = xp(p4 - p3, p1 - p3)
        d2 = xp(p4 - p3, p2 - p3)
        d3 = xp(p2 - p1, p3 - p1)
        d4 = xp(p2 - p1, p4 - p1)
        return bool(((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)))

    geom = default_geometry()
    for th in np.linspace(geom.servo_min, geom.servo_max, 60):
        pts = wing_polygon(geom, float(th)).points
        n = len(pts)
        for i in range(n):
            for j in range(i + 1, n):
                if (j + 1) % n == i or (i + 1) % n == j:
                    continue
                assert not segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])


def test_area_continuity_and_monotonicity():
    geom = default_geometry()
    thetas = np.arange(geom.servo_min, geom.servo_max, 0.001)
    areas = np.array([wing_polygon(geom, float(th)).area for th in thetas])
    assert np.all(np.diff(areas) >= 0.0)
    assert np.max(np.abs(np.diff(areas))) < 1e-3


def test_polygon_area_unit_square():
    assert polygon_area([(0, 0), (1, 0), (1, 1), (0, 1)]) == 1.0


def test_polygon_area_collinear_points():
    assert polygon_area([(0, 0), (1, 1), (2, 2)]) == 0.0


def test_polygon_area_too_few_points():
    with pytest.raises(TooFewPoints):
        polygon_area([(0, 0), (1, 1)])


def fan_triangulation_area(pts):
    pts = np.asarray(pts, dtype=float)
    total = 0.0
    for i in range(1, len(pts) - 1):
        a, b, c = pts[0], pts[i], pts[i + 1]
        total += 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return abs(total)


def test_polygon_area_matches_triangulation_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        # convex random 10-gon: sorted angles keep the triangulation valid
        ang = np.sort(rng.uniform(0, 2 * np.pi, 10))
        rad = rng.uniform(0.5, 1.5)
        pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
        a1, a2 = polygon_area(pts), fan_triangulation_area(pts)
        assert abs(a1 - a2) <= 1e-12 * max(1.0, a2)


def test_generated_polygons_match_triangulation():
    geom = default_geometry()
    for th in np.linspace(geom.servo_min, geom.servo_max, 40):
        pts = wing_polygon(geom, float(th)).points
        a1, a2 = polygon_area(pts), fan_triangulation_area(pts)
        assert abs(a1 - a2) <= 1e-10 * a2  # fan is valid: outline is star-shaped from point 1


def test_right_wing_is_mirror():
    geom = default_geometry()
    th = 0.5 * (geom.servo_min + geom.servo_max)
    left = wing_polygon(geom, th, side="left")
    right = wing_polygon(geom, th, side="right")
    assert abs(left.area - right.area) < 1e-15
    from patagium.wing import signed_polygon_area
    assert signed_polygon_area(right.points) > 0.0


def test_fold_servo_round_trip():
    geom = default_geometry()
    assert fold_to_servo(geom, FoldCommand(0.0)) == geom.servo_min
    assert fold_to_servo(geom, FoldCommand(1.0)) == geom.servo_max
    for a in np.linspace(0, 1, 17):
        assert abs(servo_to_fold(geom, fold_to_servo(geom, float(a))) - a) < 1e-12
    assert FoldCommand(1.7).a == 1.0
    assert FoldCommand(-0.3).a == 0.0
