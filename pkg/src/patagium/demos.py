"""Demonstration dataset: recording, augmentation, windows, persistence.

A demonstration log mimics what a motion-capture pipeline yields: 240 Hz
positions and attitude plus the operator's wing action and the reference
commands.  Velocities are NOT stored; they are derived numerically, and
deliberately only after augmentation noise has been mixed in, so the
training distribution sees noisy velocities exactly as the capture
pipeline would produce them.

Files are columnar CSV with a JSON sidecar carrying provenance and rates.
Dataset layout:  <root>/originals/*.csv, <root>/augmented/*.csv,
<root>/windows/windows.npz.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .config import SIM_DT, Config
from .errors import CorruptFile, SchemaMismatch, TooShort
from .flight import run_flight, schedule_action
from .trajectory import ReferenceTrajectory, build_reference

SCHEMA_VERSION = 1
LOG_COLUMNS = ["t", "x", "y", "theta_p", "a", "theta_ref", "F_ref"]
STATE_DIM = 12
WINDOW = 3


@dataclass
class Provenance:
    kind: str  # human | scripted | augmented
    parent_id: str = ""
    noise_seed: int = -1
    operator: str = ""


@dataclass
class TrajectoryLog:
    log_id: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta_p: np.ndarray
    a: np.ndarray
    theta_ref: np.ndarray
    F_ref: np.ndarray
    provenance: Provenance
    trajectory_total_time: float
    truncated: bool = False
    velocity: dict = field(default_factory=dict)  # filled by differentiate()

    def __len__(self):
        return len(self.t)

    def validate(self):
        n = len(self.t)
        for col in LOG_COLUMNS[1:]:
            if len(getattr(self, {"a": "a"}.get(col, col))) != n:
                raise SchemaMismatch(f"column {col} length mismatch")
        dt = np.diff(self.t)
        if n >= 2 and not np.allclose(dt, SIM_DT, atol=1e-9):
            raise SchemaMismatch("samples are not uniform 240 Hz")
        if np.any((self.a < 0.0) | (self.a > 1.0)):
            raise SchemaMismatch("actions outside [0, 1]")
        return self


def save_log(log: TrajectoryLog, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{log.log_id}.csv"
    data = np.stack([log.t, log.x, log.y, log.theta_p, log.a, log.theta_ref, log.F_ref], axis=-1)
    np.savetxt(path, data, delimiter=",", header=",".join(LOG_COLUMNS), comments="")
    meta = dict(
        schema_version=SCHEMA_VERSION,
        log_id=log.log_id,
        provenance=asdict(log.provenance),
        trajectory_total_time=log.trajectory_total_time,
        truncated=log.truncated,
        sample_rate=240.0,
        n_samples=len(log),
    )
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(meta, fh, indent=1)
    return path


def load_log(path) -> TrajectoryLog:
    path = Path(path)
    meta_path = path.with_suffix(".json")
    if not meta_path.exists():
        raise CorruptFile(f"missing sidecar metadata for {path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    if meta.get("schema_version", -1) > SCHEMA_VERSION:
        raise SchemaMismatch(
            f"log schema v{meta.get('schema_version')} is newer than supported v{SCHEMA_VERSION}"
        )
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise CorruptFile(f"unreadable log data in {path}: {exc}") from exc
    if data.shape[1] != len(LOG_COLUMNS):
        raise SchemaMismatch(f"expected {len(LOG_COLUMNS)} columns, found {data.shape[1]}")
    if data.shape[0] != meta["n_samples"]:
        raise CorruptFile("sample count differs from sidecar metadata")
    log = TrajectoryLog(
        log_id=meta["log_id"],
        t=data[:, 0], x=data[:, 1], y=data[:, 2], theta_p=data[:, 3],
        a=data[:, 4], theta_ref=data[:, 5], F_ref=data[:, 6],
        provenance=Provenance(**meta["provenance"]),
        trajectory_total_time=meta["trajectory_total_time"],
        truncated=meta["truncated"],
    )
    return log.validate()


def augment(log: TrajectoryLog, copies: int, seed: int, cfg: Config | None = None):
    """Gaussian-noise copies of one original log.

    Positions get sigma = 1 mm noise, attitude sigma = 0.01745 rad; the
    operator's actions and the reference commands are left untouched.
    """
    if log.provenance.kind == "augmented":
        raise SchemaMismatch("refusing to augment an already-augmented log")
    demo_cfg = (cfg or Config()).demo
    rng = np.random.default_rng(seed)
    out = []
    for k in range(copies):
        copy_seed = int(rng.integers(0, 2**31 - 1))
        crng = np.random.default_rng(copy_seed)
        out.append(
            TrajectoryLog(
                log_id=f"{log.log_id}_aug{k:03d}",
                t=log.t.copy(),
                x=log.x + crng.normal(0.0, demo_cfg.sigma_position, len(log)),
                y=log.y + crng.normal(0.0, demo_cfg.sigma_position, len(log)),
                theta_p=log.theta_p + crng.normal(0.0, demo_cfg.sigma_attitude, len(log)),
                a=log.a.copy(),
                theta_ref=log.theta_ref.copy(),
                F_ref=log.F_ref.copy(),
                provenance=Provenance(kind="augmented", parent_id=log.log_id, noise_seed=copy_seed),
                trajectory_total_time=log.trajectory_total_time,
                truncated=log.truncated,
            )
        )
    return out


def differentiate(log: TrajectoryLog) -> TrajectoryLog:
    """Numerical velocities at 240 Hz: central differences, one-sided ends."""
    if len(log) < 3:
        raise TooShort("need at least 3 samples to differentiate")

    def deriv(series):
        d = np.empty_like(series)
        d[1:-1] = (series[2:] - series[:-2]) / (2.0 * SIM_DT)
        d[0] = (series[1] - series[0]) / SIM_DT
        d[-1] = (series[-1] - series[-2]) / SIM_DT
        return d

    log.velocity = dict(v_x=deriv(log.x), v_y=deriv(log.y), theta_dot=deriv(log.theta_p))
    return log


def log_states(log: TrajectoryLog) -> np.ndarray:
    """Per-sample 12-state vectors in the training layout.

    [v_x, v_y, v_z, w_x, w_y, w_z, g_x, g_y, g_z, theta_ref, F_ref, a_prev]
    with the gravity direction derived from the (noisy) attitude and the
    previous action shifted with a zero fill at the log start.
    """
    if not log.velocity:
        differentiate(log)
    n = len(log)
    z = np.zeros(n)
    a_prev = np.concatenate([[0.0], log.a[:-1]])
    return np.stack(
        [
            log.velocity["v_x"], log.velocity["v_y"], z,
            z, z, log.velocity["theta_dot"],
            np.sin(log.theta_p), -np.cos(log.theta_p), z,
            log.theta_ref, log.F_ref, a_prev,
        ],
        axis=-1,
    )


def build_windows(logs):
    """Sliding 3-step windows, stride 1, never spanning log boundaries.

    Returns (windows (M, 3, 12), targets (M,), log_ids list).
    """
    wins, targets, ids = [], [], []
    for log in logs:
        states = log_states(log)
        n = len(log)
        for t in range(WINDOW - 1, n):
            wins.append(states[t - WINDOW + 1 : t + 1])
            targets.append(log.a[t])
            ids.append(log.log_id)
    return np.asarray(wins), np.asarray(targets), ids


def scripted_demonstrator(
    traj: ReferenceTrajectory,
    cfg: Config,
    seed: int = 0,
    unfold_early: float | None = None,
    timing_jitter: float | None = None,
    log_id: str | None = None,
) -> TrajectoryLog:
    """Closed-loop flight with a deliberately early unfold, standing in for
    a human pilot: the wings open unfold_early seconds before the end of
    the acceleration phase and close at the end of deceleration.
    """
    demo_cfg = cfg.demo
    eps = demo_cfg.unfold_early if unfold_early is None else unfold_early
    jitter = demo_cfg.timing_jitter if timing_jitter is None else timing_jitter
    rng = np.random.default_rng(seed)
    eps_k = eps + (rng.normal(0.0, jitter) if jitter > 0 else 0.0)
    fold_t = traj.t_D + (rng.normal(0.0, jitter) if jitter > 0 else 0.0)
    unfold_t = max(0.0, traj.t_B - max(0.0, eps_k))
    truncate = traj.total_time > 2.55  # mocap volume limit: 2.6 s runs lose the acceleration
    record_from = traj.t_B if truncate else 0.0
    telemetry, _ = run_flight(
        cfg, traj, schedule_action(unfold_t, min(fold_t, traj.end_time)),
        seed=seed, record=True, record_from=record_from,
    )
    name = log_id or f"scripted_T{traj.total_time:.1f}_s{seed}"
    return TrajectoryLog(
        log_id=name,
        t=telemetry["t"], x=telemetry["x"], y=telemetry["y"],
        theta_p=telemetry["theta_p"], a=telemetry["fold_a"],
        theta_ref=telemetry["theta_ref"], F_ref=telemetry["F_ref"],
        provenance=Provenance(kind="scripted", noise_seed=seed),
        trajectory_total_time=traj.total_time,
        truncated=truncate,
    ).validate()


def collect_demo_library(cfg: Config, root, seed: int = 0):
    """The full demonstration pool: 3 repeats x 3 durations, then 100
    noise copies each (909 logs with the originals included)."""
    root = Path(root)
    originals = []
    k = 0
    for duration in cfg.experiment.task_durations:
        traj = build_reference(
            duration, cfg.experiment.theta_min, cfg.experiment.theta_max,
            mass=cfg.robot.mass, rest_time=cfg.trajectory.rest_time,
            dec_phase_ratio=cfg.trajectory.dec_phase_ratio,
            acc_phase_ratio=cfg.trajectory.acc_phase_ratio,
        )
        for rep in range(cfg.demo.repeats_per_task):
            log = scripted_demonstrator(traj, cfg, seed=seed + k, log_id=f"orig_T{duration:.1f}_r{rep}")
            save_log(log, root / "originals")
            originals.append(log)
            k += 1
    count = 0
    for log in originals:
        for aug in augment(log, cfg.demo.copies_per_original, seed=seed + 1000 + count, cfg=cfg):
            save_log(aug, root / "augmented")
            count += 1
    return root


def load_library(root):
    root = Path(root)
    logs = []
    for sub in ("originals", "augmented"):
        d = root / sub
        if d.exists():
            logs.extend(load_log(p) for p in sorted(d.glob("*.csv")))
    return logs


def save_windows(windows, targets, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, schema_version=SCHEMA_VERSION, windows=windows, targets=targets)
    return path


def load_windows(path):
    with np.load(path) as data:
        if int(data["schema_version"]) > SCHEMA_VERSION:
            raise SchemaMismatch("windows file schema is newer than supported")
        return data["windows"], data["targets"]
