"""Demonstration logs: augmentation, differentiation, windows, persistence."""

import json

import numpy as np
import pytest

from patagium.config import SIM_DT, Config
from patagium.demos import (
    Provenance,
    TrajectoryLog,
    augment,
    build_windows,
    differentiate,
    load_log,
    load_windows,
    log_states,
    save_log,
    save_windows,
    scripted_demonstrator,
)
from patagium.errors import CorruptFile, SchemaMismatch, TooShort
from patagium.trajectory import build_reference


def synthetic_log(n=480, log_id="syn", action=None):
    t = np.arange(n) * SIM_DT
    a = action if action is not None else np.clip(np.sin(t) ** 2, 0, 1)
    return TrajectoryLog(
        log_id=log_id, t=t, x=2.0 * t, y=0.1 * t, theta_p=0.3 * np.sin(2 * np.pi * t),
        a=a, theta_ref=0.2 * np.ones(n), F_ref=6.23 * np.ones(n),
        provenance=Provenance(kind="scripted", noise_seed=0),
        trajectory_total_time=2.0,
    )


def make_reference(total=2.0):
    cfg = Config()
    return cfg, build_reference(total, cfg.experiment.theta_min, cfg.experiment.theta_max,
                                mass=cfg.robot.mass)


def test_augment_counts_and_preservation():
    log = synthetic_log()
    copies = augment(log, 5, seed=0)
    assert len(copies) == 5
    assert augment(log, 0, seed=0) == []
    for c in copies:
        assert len(c) == len(log)
        assert np.array_equal(c.a, log.a)  # actions untouched, bitwise
        assert np.array_equal(c.theta_ref, log.theta_ref)
        assert c.provenance.kind == "augmented"
        assert c.provenance.parent_id == log.log_id
        assert not np.array_equal(c.x, log.x)


def test_augment_rejects_double_augmentation():
    log = synthetic_log()
    child = augment(log, 1, seed=0)[0]
    with pytest.raises(SchemaMismatch):
        augment(child, 1, seed=0)


def test_augment_noise_statistics():
    log = synthetic_log(600)
    copies = augment(log, 200, seed=1)
    dx = np.concatenate([c.x - log.x for c in copies])
    dth = np.concatenate([c.theta_p - log.theta_p for c in copies])
    assert dx.size >= 1e5
    assert abs(dx.std() - 0.001) < 0.001 * 0.05
    assert abs(dth.std() - 0.01745) < 0.01745 * 0.05


def test_augment_deterministic_per_seed():
    log = synthetic_log()
    a = augment(log, 3, seed=9)
    b = augment(log, 3, seed=9)
    for u, v in zip(a, b):
        assert np.array_equal(u.x, v.x) and np.array_equal(u.theta_p, v.theta_p)


def test_differentiate_linear_ramp():
    log = synthetic_log()
    differentiate(log)
    assert np.max(np.abs(log.velocity["v_x"] - 2.0)) < 1e-9
    assert np.max(np.abs(log.velocity["v_y"] - 0.1)) < 1e-9


def test_differentiate_constant_position():
    log = synthetic_log()
    log.x = np.ones_like(log.x)
    differentiate(log)
    assert np.max(np.abs(log.velocity["v_x"])) == 0.0


def test_differentiate_sine_against_analytic():
    n = 2400
    t = np.arange(n) * SIM_DT
    log = synthetic_log(n)
    log.x = np.sin(2 * np.pi * t)
    differentiate(log)
    analytic = 2 * np.pi * np.cos(2 * np.pi * t)
    err = np.abs(log.velocity["v_x"][1:-1] - analytic[1:-1])
    assert err.max() / np.abs(analytic).max() < 1e-3


def test_differentiate_too_short():
    with pytest.raises(TooShort):
        differentiate(synthetic_log(2))


def test_integration_recovers_positions():
    cfg, traj = make_reference(2.6)
    log = scripted_demonstrator(traj, cfg, seed=0, timing_jitter=0.0)
    differentiate(log)
    x_rec = log.x[0] + np.concatenate(
        [[0.0], np.cumsum(0.5 * (log.velocity["v_x"][1:] + log.velocity["v_x"][:-1]) * SIM_DT)]
    )
    assert np.max(np.abs(x_rec - log.x)) < 1e-3


def test_window_count_and_layout():
    log = synthetic_log(100)
    wins, targets, ids = build_windows([log])
    assert wins.shape == (98, 3, 12)
    assert targets.shape == (98,)
    assert np.all((targets >= 0.0) & (targets <= 1.0))
    assert np.all(np.isfinite(wins))
    # gravity direction is unit norm in every state
    g = wins[:, :, 6:9]
    np.testing.assert_allclose(np.linalg.norm(g, axis=-1), 1.0, atol=1e-12)
    # previous-action channel is the shifted target with zero fill
    states = log_states(log)
    assert states[0, 11] == 0.0
    np.testing.assert_array_equal(states[1:, 11], log.a[:-1])


def test_windows_never_span_logs():
    l1, l2 = synthetic_log(50, "a"), synthetic_log(60, "b")
    wins, targets, ids = build_windows([l1, l2])
    assert len(wins) == 48 + 58
    assert ids[:48] == ["a"] * 48 and ids[48:] == ["b"] * 58


def test_scripted_unfold_timing():
    cfg, traj = make_reference(2.0)
    log = scripted_demonstrator(traj, cfg, seed=0, unfold_early=0.0, timing_jitter=0.0)
    rise = log.t[np.argmax(log.a > 0.5)]
    assert abs(rise - traj.t_B) < 2 * SIM_DT
    log2 = scripted_demonstrator(traj, cfg, seed=0, timing_jitter=0.0)
    rise2 = log2.t[np.argmax(log2.a > 0.5)]
    assert rise2 < traj.t_B  # default pilot unfolds early, like the humans did
    assert abs((traj.t_B - rise2) - cfg.demo.unfold_early) < 2 * SIM_DT


def test_scripted_truncation_for_longest_task():
    cfg, traj = make_reference(2.6)
    log = scripted_demonstrator(traj, cfg, seed=1, timing_jitter=0.0)
    assert log.truncated
    assert log.t[0] >= traj.t_B - SIM_DT
    cfg2, traj2 = make_reference(2.0)
    assert not scripted_demonstrator(traj2, cfg2, seed=1, timing_jitter=0.0).truncated


def test_nine_originals():
    cfg = Config()
    logs = []
    for duration in cfg.experiment.task_durations:
        traj = build_reference(duration, cfg.experiment.theta_min, cfg.experiment.theta_max,
                               mass=cfg.robot.mass)
        for rep in range(cfg.demo.repeats_per_task):
            logs.append(scripted_demonstrator(traj, cfg, seed=rep, log_id=f"o_{duration}_{rep}"))
    assert len(logs) == 9
    assert len({log.log_id for log in logs}) == 9


def test_save_load_round_trip(tmp_path):
    log = synthetic_log()
    path = save_log(log, tmp_path)
    back = load_log(path)
    for col in ("t", "x", "y", "theta_p", "a", "theta_ref", "F_ref"):
        assert np.array_equal(getattr(back, col), getattr(log, col))
    assert back.provenance == log.provenance
    assert back.trajectory_total_time == log.trajectory_total_time


def test_load_future_schema_rejected(tmp_path):
    log = synthetic_log()
    path = save_log(log, tmp_path)
    meta = json.loads(path.with_suffix(".json").read_text())
    meta["schema_version"] = 99
    path.with_suffix(".json").write_text(json.dumps(meta))
    with pytest.raises(SchemaMismatch):
        load_log(path)


def test_load_corrupt_file(tmp_path):
    log = synthetic_log()
    path = save_log(log, tmp_path)
    path.write_text("t,x\n0.0,garbage_row\n")
    with pytest.raises((CorruptFile, SchemaMismatch)):
        load_log(path)


def test_windows_file_round_trip(tmp_path):
    wins, targets, _ = build_windows([synthetic_log(40)])
    p = save_windows(wins, targets, tmp_path / "w.npz")
    w2, t2 = load_windows(p)
    assert np.array_equal(wins, w2) and np.array_equal(targets, t2)
