"""Experiment harness: reproduces the demonstration -> pretrain -> residual
-> comparison pipeline, emitting CSV reports, plain-text tables and figures.

Directory layout under the output root:

    demos/            demonstration library (originals/, augmented/, windows/)
    policies/         base.bundle, residual_T*.bundle, naive_T*.bundle + curves
    comparison/       comparison.csv, comparison.txt, runs/*.csv, figures/
    timelines/        action_timeline_T*.csv + figure
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plotting
from .config import Config
from .demos import build_windows, collect_demo_library, load_library, save_windows
from .errors import MissingPolicy
from .flight import constant_action, run_flight, write_telemetry_csv
from .policy import (
    BasePolicy,
    ResidualActor,
    ValueNet,
    base_action_source,
    load_base_policy,
    load_residual,
    naive_action_source,
    ppo_train,
    naive_train,
    pretrain,
    residual_action_source,
    rollout_policy,
    save_base_policy,
    save_residual,
)
from .trajectory import build_reference


def task_reference(cfg: Config, duration: float):
    return build_reference(
        duration, cfg.experiment.theta_min, cfg.experiment.theta_max,
        mass=cfg.robot.mass, rest_time=cfg.trajectory.rest_time,
        dec_phase_ratio=cfg.trajectory.dec_phase_ratio,
        acc_phase_ratio=cfg.trajectory.acc_phase_ratio,
    )


def prepare_demos(cfg: Config, out: Path, seed: int = 0):
    demo_root = out / "demos"
    collect_demo_library(cfg, demo_root, seed=seed)
    logs = load_library(demo_root)
    windows, targets, ids = build_windows(logs)
    save_windows(windows, targets, demo_root / "windows" / "windows.npz")
    return demo_root, windows, targets


def run_pretraining(cfg: Config, out: Path, windows, targets, seed: int = 0, epochs=None):
    stride = max(1, cfg.pretrain.window_stride)
    result = pretrain(windows[::stride], targets[::stride], cfg, epochs=epochs, seed=seed)
    pol_dir = out / "policies"
    pol_dir.mkdir(parents=True, exist_ok=True)
    save_base_policy(pol_dir / "base.bundle", result.policy, dict(seed=seed))
    curve = np.stack([np.arange(len(result.train_losses)), result.train_losses, result.val_mae], axis=-1)
    np.savetxt(pol_dir / "pretrain_curve.csv", curve, delimiter=",",
               header="epoch,train_loss,val_mae", comments="")
    plotting.save_curve_figure(result.train_losses, "train loss",
                               pol_dir / "pretrain_curve.png",
                               second=result.val_mae, second_label="val MAE")
    return result


def train_residuals(cfg: Config, out: Path, base: BasePolicy, seed: int = 0, iterations=None):
    pol_dir = out / "policies"
    pol_dir.mkdir(parents=True, exist_ok=True)
    trained = {}
    for duration in cfg.experiment.task_durations:
        traj = task_reference(cfg, duration)
        actor, value, hist = ppo_train(cfg, traj, base, seed=seed, iterations=iterations)
        save_residual(pol_dir / f"residual_T{duration:.1f}.bundle", actor, value, actor.c_aux,
                      dict(task=duration, seed=seed))
        if hist.episode_returns:
            np.savetxt(pol_dir / f"residual_T{duration:.1f}_curve.csv",
                       np.stack([np.arange(len(hist.episode_returns)), hist.episode_returns], axis=-1),
                       delimiter=",", header="episode,mean_return", comments="")
            plotting.save_curve_figure(hist.episode_returns, "mean episode return",
                                       pol_dir / f"residual_T{duration:.1f}_curve.png")
        trained[duration] = (actor, value, hist)
    return trained


def train_naives(cfg: Config, out: Path, normalizer, seed: int = 0, iterations=None, durations=None):
    pol_dir = out / "policies"
    pol_dir.mkdir(parents=True, exist_ok=True)
    trained = {}
    for duration in durations or cfg.experiment.task_durations:
        traj = task_reference(cfg, duration)
        actor, value, hist = naive_train(cfg, traj, seed=seed, normalizer=normalizer, iterations=iterations)
        save_residual(pol_dir / f"naive_T{duration:.1f}.bundle", actor, value, 1.0,
                      dict(task=duration, seed=seed, kind="naive"))
        trained[duration] = (actor, value, hist)
    return trained


@dataclass
class ComparisonReport:
    rows: list  # dicts: task, controller, seed, v_B, v_E, delta_v, sat_time

    def to_csv(self, path):
        cols = ["task", "controller", "seed", "v_B", "v_E", "delta_v", "sat_duty", "sat_time"]
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join(f"{r[c]:.9g}" if isinstance(r[c], float) else str(r[c]) for c in cols))
        Path(path).write_text("\n".join(lines) + "\n")
        return path

    def to_table(self) -> str:
        tasks = sorted({r["task"] for r in self.rows})
        ctrls = sorted({r["controller"] for r in self.rows})
        out = [f"{'task':>6} | " + " | ".join(f"{c:>20}" for c in ctrls),
               "-" * (9 + 23 * len(ctrls))]
        for task in tasks:
            cells = []
            for c in ctrls:
                vals = [r["delta_v"] for r in self.rows if r["task"] == task and r["controller"] == c]
                cells.append(f"{np.mean(vals):20.4f}" if vals else " " * 20)
            out.append(f"{task:6.1f} | " + " | ".join(cells))
        out.append("(mean decreased velocity during deceleration, m/s)")
        return "\n".join(out)


def _wing_action_replay(actions: np.ndarray):
    def fn(i, t, batch, ref):
        k = min(i, len(actions) - 1)
        return np.full(batch.n, actions[k])
    return fn


def run_comparison(
    cfg: Config,
    out: Path,
    base: BasePolicy,
    residuals: dict,
    naives: dict | None = None,
    seeds=None,
    replay: bool = True,
) -> ComparisonReport:
    """Nominal vs residual (vs scripted human proxy, vs naive) on each task.

    With replay=True the residual's wing action sequence is recorded from
    one closed-loop simulation and replayed open-loop under each
    evaluation seed, mirroring the deployment mode used on hardware.
    """
    seeds = list(cfg.experiment.eval_seeds if seeds is None else seeds)
    comp_dir = out / "comparison"
    (comp_dir / "runs").mkdir(parents=True, exist_ok=True)
    rows = []
    for duration in cfg.experiment.task_durations:
        traj = task_reference(cfg, duration)
        if duration not in residuals:
            raise MissingPolicy(f"no trained residual for the {duration} s task")
        actor = residuals[duration][0]
        source = residual_action_source(base, actor, actor.c_aux)
        replay_actions = None
        if replay:
            rec = rollout_policy(cfg, task_reference(cfg, duration), source,
                                 n_envs=1, seed=cfg.experiment.train_seed)
            replay_actions = rec["actions"][:, 0]
        controllers = {
            "nominal": constant_action(0.0),
            "residual": (_wing_action_replay(replay_actions) if replay
                         else None),
            "scripted_human": None,  # built per seed below
        }
        for seed in seeds:
            tel, summary = run_flight(cfg, traj, constant_action(0.0), seed=seed, record=True)
            write_telemetry_csv(tel, comp_dir / "runs" / f"nominal_T{duration:.1f}_s{seed}.csv")
            rows.append(dict(task=duration, controller="nominal", seed=seed, **summary))

            if replay:
                tel, summary = run_flight(cfg, traj, _wing_action_replay(replay_actions),
                                          seed=seed, record=True)
            else:
                roll = rollout_policy(cfg, traj, source, n_envs=1, seed=seed)
                summary = dict(v_B=float(roll["v_B"][0]), v_E=float(roll["v_E"][0]),
                               delta_v=float(roll["delta_v"][0]), sat_duty=float("nan"),
                               sat_time=float("nan"))
                tel = None
            if tel is not None:
                write_telemetry_csv(tel, comp_dir / "runs" / f"residual_T{duration:.1f}_s{seed}.csv")
            rows.append(dict(task=duration, controller="residual", seed=seed, **summary))

            from .flight import schedule_action
            tel, summary = run_flight(
                cfg, traj, schedule_action(traj.t_B - cfg.demo.unfold_early, traj.end_time),
                seed=seed, record=True,
            )
            write_telemetry_csv(tel, comp_dir / "runs" / f"scripted_human_T{duration:.1f}_s{seed}.csv")
            rows.append(dict(task=duration, controller="scripted_human", seed=seed, **summary))

            if naives and duration in naives:
                roll = rollout_policy(cfg, traj, naive_action_source(naives[duration][0]),
                                      n_envs=1, seed=seed)
                rows.append(dict(task=duration, controller="naive", seed=seed,
                                 v_B=float(roll["v_B"][0]), v_E=float(roll["v_E"][0]),
                                 delta_v=float(roll["delta_v"][0]), sat_duty=float("nan"),
                                 sat_time=float("nan")))
    report = ComparisonReport(rows)
    report.to_csv(comp_dir / "comparison.csv")
    (comp_dir / "comparison.txt").write_text(report.to_table() + "\n")
    (comp_dir / "figures").mkdir(exist_ok=True)
    plotting.save_comparison_figure(rows, comp_dir / "figures" / "deceleration_comparison.png")
    return report


def recompute_from_runs(comp_dir: Path):
    """Rebuild (task, controller, seed) -> metrics from the raw run CSVs.

    Independent of the summaries: reads the telemetry and recomputes v_B,
    v_E and delta_v from the state columns alone.
    """
    out = {}
    for path in sorted((Path(comp_dir) / "runs").glob("*.csv")):
        name = path.stem  # e.g. nominal_T2.0_s3
        ctrl, t_part, s_part = name.rsplit("_", 2)
        duration = float(t_part[1:])
        seed = int(s_part[1:])
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        t, v_x, phase = data[:, 0], data[:, 4], data[:, 20]
        in_acc = phase <= 2.0
        k = int(np.nonzero(~in_acc)[0][0]) if np.any(~in_acc) else len(t) - 1
        v_b = v_x[k - 1] if k > 0 else v_x[0]
        v_e = v_x[-1]
        out[(duration, ctrl, seed)] = dict(v_B=float(v_b), v_E=float(v_e),
                                           delta_v=float(v_b - abs(v_e)))
    return out


def action_timeline(cfg: Config, out: Path, base: BasePolicy, residuals: dict, naives: dict,
                    seed: int = 0):
    """Per-task wing action traces for residual / scripted / naive."""
    tl_dir = out / "timelines"
    tl_dir.mkdir(parents=True, exist_ok=True)
    timelines = {}
    for duration in cfg.experiment.task_durations:
        traj = task_reference(cfg, duration)
        marks = (traj.t_A, traj.t_B, traj.t_C, traj.t_D)
        entries = {}
        actor = residuals[duration][0]
        roll = rollout_policy(cfg, traj, residual_action_source(base, actor, actor.c_aux),
                              n_envs=1, seed=seed)
        entries["residual"] = (roll["t"], roll["actions"][:, 0], marks)
        # scripted human proxy: binary open window starting early
        t = roll["t"]
        human = ((t >= traj.t_B - cfg.demo.unfold_early) & (t < traj.t_D)).astype(float)
        entries["scripted_human"] = (t, human, marks)
        if duration in naives:
            nroll = rollout_policy(cfg, traj, naive_action_source(naives[duration][0]),
                                   n_envs=1, seed=seed)
            entries["naive"] = (nroll["t"], nroll["actions"][:, 0], marks)
        timelines[duration] = entries
        cols = [roll["t"]]
        headers = ["t"]
        for name, (tt, act, _) in sorted(entries.items()):
            cols.append(np.interp(roll["t"], tt, act))
            headers.append(name)
        np.savetxt(tl_dir / f"action_timeline_T{duration:.1f}.csv",
                   np.stack(cols, axis=-1), delimiter=",", header=",".join(headers), comments="")
    plotting.save_action_timeline_figure(timelines, tl_dir / "action_timeline.png")
    return timelines


def run_pipeline(cfg: Config, out: Path, seed: int = 0, pretrain_epochs=None, rl_iterations=None,
                 train_naive: bool = False):
    """demo -> pretrain -> residual (-> naive) -> comparison, one seed."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    demo_root, windows, targets = prepare_demos(cfg, out, seed=seed)
    result = run_pretraining(cfg, out, windows, targets, seed=seed, epochs=pretrain_epochs)
    residuals = train_residuals(cfg, out, result.policy, seed=seed, iterations=rl_iterations)
    naives = {}
    if train_naive:
        naives = train_naives(cfg, out, result.policy.normalizer, seed=seed, iterations=rl_iterations)
    report = run_comparison(cfg, out, result.policy, residuals, naives)
    return report


def load_policies(cfg: Config, out: Path):
    pol_dir = Path(out) / "policies"
    base_path = pol_dir / "base.bundle"
    if not base_path.exists():
        raise MissingPolicy(f"no base policy bundle at {base_path}")
    base = load_base_policy(base_path, cfg)
    residuals, naives = {}, {}
    for duration in cfg.experiment.task_durations:
        rp = pol_dir / f"residual_T{duration:.1f}.bundle"
        if rp.exists():
            actor, value, meta = load_residual(rp, cfg)
            residuals[duration] = (actor, value, meta)
        np_path = pol_dir / f"naive_T{duration:.1f}.bundle"
        if np_path.exists():
            actor, value, meta = load_residual(np_path, cfg)
            naives[duration] = (actor, value, meta)
    return base, residuals, naives
