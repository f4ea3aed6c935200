"""Foldable-wing linkage kinematics and membrane geometry.

One wing is driven by a single servo through a crank-rocker four-bar
(RRRR) whose crank and rocker tips each push a slider along a rotor arm
through a coupler link (RRRP).  The input/output angle relation of the
four-bar is the Freudenstein equation

    R1 cos(thetaB) - R2 cos(theta0) + R3 = cos(theta0 - thetaB)

with R1 = r1/r2, R2 = r1/r4, R3 = (r1^2 + r2^2 + r4^2 - r3^2) / (2 r2 r4),
angles measured from the ground-link ray.  The membrane outline is built
from twelve defining points (fixed rail points, knee tabs, sliders,
batten tips, and the crank/rocker tips that carry the tabs under the
membrane); its area comes from the shoelace formula.

Wing-plane coordinates: x forward, y outboard (left wing).  The right
wing is the y-mirror.  All lengths in metres, angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchAmbiguity, ConfigError, DegenerateMembrane, NoRealSolution, TooFewPoints

# Tolerances for branch selection and knee-collinearity tests.
_BRANCH_TOL = 1e-8
_KNEE_CROSS_TOL = 1e-12


def polygon_area(points) -> float:
    """Shoelace area of a simple polygon given as an (n, 2) array of ordered vertices."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise TooFewPoints(f"polygon needs >=3 planar points, got shape {pts.shape}")
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def signed_polygon_area(points) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise TooFewPoints(f"polygon needs >=3 planar points, got shape {pts.shape}")
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass
class FoldCommand:
    """Wing fold fraction in [0, 1]: 0 = folded, 1 = unfolded. Input is clamped."""

    a: float

    def __post_init__(self):
        self.a = float(min(1.0, max(0.0, self.a)))


@dataclass
class WingPolygon:
    points: np.ndarray  # (n, 2), CCW
    servo_angle: float
    side: str  # "left" | "right"

    @property
    def area(self) -> float:
        return polygon_area(self.points)

    @property
    def n_vertices(self) -> int:
        return int(self.points.shape[0])


@dataclass
class LinkageGeometry:
    """Link lengths, servo limits and the fixed-point mount table for one wing.

    ``mount_points`` holds the body-frame fixed coordinates: servo pivot,
    arm hubs and the four membrane rail attachments.  The ground link runs
    from the servo pivot along ``ground_angle``; servo and rocker angles
    are measured CCW from that ray.
    """

    r1: float
    r2: float
    r3: float
    r4: float
    servo_min: float
    servo_max: float
    mount_points: dict = field(default_factory=dict)
    ground_angle: float = math.pi
    arm_front_angle: float = 0.96
    arm_back_angle: float = 2.18
    coupler_front: float = 0.07
    coupler_back: float = 0.07
    batten_front: float = 0.03
    batten_back: float = 0.03
    # membrane knee tabs: bonded to the crank / rocker plates at (radius, angular offset
    # from the plate arm); they push the membrane edge outboard like tent poles
    knee_front_radius: float = 0.035
    knee_front_offset: float = 1.95
    knee_back_radius: float = 0.06
    knee_back_offset: float = 1.0
    slider_root_front: int = 1  # +1: slider outboard of the coupler foot, -1: inboard
    slider_root_back: int = 1
    thetaB_folded_hint: float | None = None  # linkage-frame rocker angle near servo_min
    min_area: float = 1e-4
    branch: int = 0  # 0 = resolve from folded configuration at construction

    def __post_init__(self):
        for name in ("r1", "r2", "r3", "r4"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"link length {name} must be positive")
        if not self.servo_min < self.servo_max:
            raise ConfigError("servo_min must be below servo_max")
        defaults = _default_mount_points()
        for key, val in defaults.items():
            self.mount_points.setdefault(key, val)
        self.mount_points = {k: np.asarray(v, dtype=float) for k, v in self.mount_points.items()}
        self._ground_rot = np.array(
            [
                [math.cos(self.ground_angle), -math.sin(self.ground_angle)],
                [math.sin(self.ground_angle), math.cos(self.ground_angle)],
            ]
        )
        if self.branch == 0:
            self.branch = self._resolve_branch()
        self._validate_range()

    # -- Freudenstein -------------------------------------------------

    def freudenstein_coeffs(self):
        R1 = self.r1 / self.r2
        R2 = self.r1 / self.r4
        R3 = (self.r1**2 + self.r2**2 + self.r4**2 - self.r3**2) / (2.0 * self.r2 * self.r4)
        return R1, R2, R3

    @property
    def servo_pivot(self) -> np.ndarray:
        return self.mount_points["servo_pivot"]

    @property
    def rocker_pivot(self) -> np.ndarray:
        return self.servo_pivot + self.r1 * self._ground_rot @ np.array([1.0, 0.0])

    def _linkage_dir(self, angle):
        return self._ground_rot @ np.array([math.cos(angle), math.sin(angle)])

    def crank_tip(self, theta0: float) -> np.ndarray:
        return self.servo_pivot + self.r2 * self._linkage_dir(theta0)

    def rocker_tip(self, thetaB: float) -> np.ndarray:
        return self.rocker_pivot + self.r4 * self._linkage_dir(thetaB)

    def _branch_candidates(self, theta0):
        """Both closed-form solutions of the Freudenstein equation at theta0."""
        R1, R2, R3 = self.freudenstein_coeffs()
        a = R1 - math.cos(theta0)
        b = -math.sin(theta0)
        c = R2 * math.cos(theta0) - R3
        rho = math.hypot(a, b)
        if rho < 1e-15:
            raise NoRealSolution("degenerate crank position: output angle unconstrained")
        arg = c / rho
        if abs(arg) > 1.0 + 1e-12:
            raise NoRealSolution(
                f"four-bar loop cannot close at theta0={theta0:.6f} (|cos| argument {arg:.6f})"
            )
        arg = min(1.0, max(-1.0, arg))
        delta = math.acos(arg)
        phi = math.atan2(b, a)
        return phi + delta, phi - delta, delta

    def _resolve_branch(self) -> int:
        """Pick the assembly branch from the folded configuration.

        With a hint, take the branch whose rocker angle at servo_min is
        nearest the hinted assembly; otherwise assemble with the rocker on
        the membrane side (sin(thetaB) > 0 in the linkage frame).
        Continuity tracking from there keeps the sign constant.
        """
        up, down, delta = self._branch_candidates(self.servo_min)
        if delta < _BRANCH_TOL:
            raise BranchAmbiguity("four-bar starts at a dead point; branch undefined")
        if self.thetaB_folded_hint is not None:
            du = abs(_wrap_angle(up - self.thetaB_folded_hint))
            dd = abs(_wrap_angle(down - self.thetaB_folded_hint))
            return 1 if du <= dd else -1
        return 1 if math.sin(up) >= math.sin(down) else -1

    def _validate_range(self, samples: int = 1024):
        thetas = np.linspace(self.servo_min, self.servo_max, samples)
        prev = None
        for th in thetas:
            out = solve_output_angle(self, float(th))
            if prev is not None and abs(out - prev) > 0.25:
                raise ConfigError(
                    "output angle jumps across the servo sweep; geometry is not "
                    "continuously assemblable over the configured range"
                )
            prev = out


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _default_mount_points():
    return {
        "servo_pivot": (0.020, 0.070),
        "front_hub": (0.070, 0.060),
        "back_hub": (-0.050, 0.060),
        "rail_front": (0.120, 0.045),
        "rail_back": (-0.130, 0.045),
        "rail_inner_back": (-0.090, 0.035),
        "rail_inner_front": (0.070, 0.035),
    }


def solve_output_angle(geom: LinkageGeometry, theta0: float) -> float:
    """Rocker angle thetaB for servo angle theta0 via the Freudenstein closed form.

    Branch selection is fixed per geometry (resolved from the folded
    configuration), so the returned angle is continuous in theta0.
    """
    plus, minus, delta = geom._branch_candidates(theta0)
    if delta < _BRANCH_TOL:
        raise BranchAmbiguity(
            f"both output branches coincide at theta0={theta0:.6f}; continuity cannot pick one"
        )
    return plus if geom.branch > 0 else minus


def freudenstein_residual(geom: LinkageGeometry, theta0: float, thetaB: float) -> float:
    R1, R2, R3 = geom.freudenstein_coeffs()
    return R1 * math.cos(thetaB) - R2 * math.cos(theta0) + R3 - math.cos(theta0 - thetaB)


def _slider_along_arm(
    joint: np.ndarray, hub: np.ndarray, direction: np.ndarray, coupler: float, root: int
) -> float:
    """Distance along the arm ray of the slider linked to ``joint`` by a rigid coupler."""
    w = joint - hub
    proj = float(direction @ w)
    disc = proj * proj - (float(w @ w) - coupler * coupler)
    if disc < 0.0:
        raise NoRealSolution("coupler cannot reach the arm axis")
    return proj + root * math.sqrt(disc)


def slider_position(geom: LinkageGeometry, theta0: float):
    """Front and back slider positions (2-D, wing plane) at servo angle theta0.

    The front slider is pushed by the crank tip, the back slider (the
    P_LB-style joint) by the rocker tip; both ride their rotor-arm axes.
    """
    thetaB = solve_output_angle(geom, theta0)
    a_tip = geom.crank_tip(theta0)
    b_tip = geom.rocker_tip(thetaB)
    hub_f = geom.mount_points["front_hub"]
    hub_b = geom.mount_points["back_hub"]
    dir_f = np.array([math.cos(geom.arm_front_angle), math.sin(geom.arm_front_angle)])
    dir_b = np.array([math.cos(geom.arm_back_angle), math.sin(geom.arm_back_angle)])
    s_f = _slider_along_arm(a_tip, hub_f, dir_f, geom.coupler_front, geom.slider_root_front)
    s_b = _slider_along_arm(b_tip, hub_b, dir_b, geom.coupler_back, geom.slider_root_back)
    return hub_f + s_f * dir_f, hub_b + s_b * dir_b


def _knee_is_out(p: np.ndarray, q: np.ndarray, knee: np.ndarray) -> bool:
    """True when the knee deflects the membrane outboard of the chord p->q.

    The outline is CCW, so 'outboard' is to the right of the directed
    chord; an exactly collinear knee lies on the taut membrane edge and
    is dropped.
    """
    cross = (q[0] - p[0]) * (knee[1] - p[1]) - (q[1] - p[1]) * (knee[0] - p[0])
    return cross < -_KNEE_CROSS_TOL


def membrane_points(geom: LinkageGeometry, theta0: float) -> dict:
    """The twelve points that shape the membrane area, by index.

    1: rail_front (fixed)        2: rail_back (fixed)
    3: front knee tab            4: front slider
    5: back knee tab             6: back slider
    7: front batten tip          8: back batten tip
    9: rail_inner_back (fixed)  10: rail_inner_front (fixed)
    11: crank tip               12: rocker tip
    Moving points (3..8, 11, 12) follow the linkage solution; the knee
    tabs ride the crank/rocker plates and push the membrane edge outboard
    like tent poles when they clear their chords.
    """
    thetaB = solve_output_angle(geom, theta0)
    slider_f, slider_b = slider_position(geom, theta0)
    knee_f = geom.servo_pivot + geom.knee_front_radius * geom._linkage_dir(
        theta0 + geom.knee_front_offset
    )
    knee_b = geom.rocker_pivot + geom.knee_back_radius * geom._linkage_dir(
        thetaB + geom.knee_back_offset
    )
    dir_f = np.array([math.cos(geom.arm_front_angle), math.sin(geom.arm_front_angle)])
    dir_b = np.array([math.cos(geom.arm_back_angle), math.sin(geom.arm_back_angle)])
    return {
        1: geom.mount_points["rail_front"],
        2: geom.mount_points["rail_back"],
        3: knee_f,
        4: slider_f,
        5: knee_b,
        6: slider_b,
        7: slider_f + geom.batten_front * dir_f,
        8: slider_b + geom.batten_back * dir_b,
        9: geom.mount_points["rail_inner_back"],
        10: geom.mount_points["rail_inner_front"],
        11: geom.crank_tip(theta0),
        12: geom.rocker_tip(thetaB),
    }


def wing_polygon(geom: LinkageGeometry, theta0: float, side: str = "left") -> WingPolygon:
    """Membrane outline polygon at servo angle theta0.

    Assembles the defining points, keeps a knee tab only while it pushes
    the membrane outboard of its chord (the taut-membrane rule: a knee on
    or inboard of the chord lies under the stretched membrane), and
    returns a simple CCW polygon.  The crank/rocker tips and ground
    pivots sit under the membrane and never appear on the outline.
    """
    pts = membrane_points(geom, theta0)
    rail_f, rail_b = pts[1], pts[2]
    knee_f, knee_b = pts[3], pts[5]
    slider_f, slider_b = pts[4], pts[6]

    outline = [rail_f]
    if _knee_is_out(rail_f, slider_f, knee_f):
        outline.append(knee_f)
    outline += [slider_f, pts[7], pts[8], slider_b]
    if _knee_is_out(slider_b, rail_b, knee_b):
        outline.append(knee_b)
    outline += [rail_b, pts[9], pts[10]]

    pts = np.array(outline, dtype=float)
    if signed_polygon_area(pts) <= 0.0:
        raise DegenerateMembrane("membrane outline lost CCW orientation")
    if polygon_area(pts) < geom.min_area:
        raise DegenerateMembrane(
            f"membrane area {polygon_area(pts):.6f} m^2 below configured minimum {geom.min_area}"
        )
    if side == "right":
        pts = pts[::-1].copy()
        pts[:, 1] *= -1.0
    elif side != "left":
        raise ConfigError(f"unknown wing side {side!r}")
    return WingPolygon(points=pts, servo_angle=float(theta0), side=side)


def wing_area(geom: LinkageGeometry, theta0: float) -> float:
    return wing_polygon(geom, theta0).area


def fold_to_servo(geom: LinkageGeometry, cmd: FoldCommand | float) -> float:
    """Affine map of the [0, 1] fold fraction onto [servo_min, servo_max]."""
    a = cmd.a if isinstance(cmd, FoldCommand) else float(min(1.0, max(0.0, cmd)))
    return geom.servo_min + a * (geom.servo_max - geom.servo_min)


def servo_to_fold(geom: LinkageGeometry, servo: float) -> float:
    a = (servo - geom.servo_min) / (geom.servo_max - geom.servo_min)
    return float(min(1.0, max(0.0, a)))


class AreaTable:
    """Dense servo-angle -> membrane-area lookup for the simulator hot loop.

    The effective (aerodynamic) area subtracts the folded-state area so a
    fully folded wing presents no plate to the flow, matching the nominal
    wing-less quadrotor exactly.
    """

    def __init__(self, geom: LinkageGeometry, samples: int = 4097):
        self.geom = geom
        self.servo = np.linspace(geom.servo_min, geom.servo_max, samples)
        self.area = np.array([wing_area(geom, float(th)) for th in self.servo])
        self.area_folded = float(self.area[0])

    def raw_area(self, servo):
        return np.interp(servo, self.servo, self.area)

    def effective_area(self, servo):
        return np.maximum(self.raw_area(servo) - self.area_folded, 0.0)
