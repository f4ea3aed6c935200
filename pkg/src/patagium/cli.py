"""patagium command-line interface.

Subcommands:
  gen-traj        emit a braking reference as CSV (+ figure)
  sweep-wing      sweep the servo range, emit linkage/area CSV (+ figure)
  demo            record | augment | windows for the demonstration library
  pretrain        supervised pretraining of the base wing policy
  train-residual  residual PPO per task
  train-naive     from-scratch PPO baseline per task
  eval-policy     roll out a trained policy and print metrics
  compare         nominal-vs-residual deceleration report (CSV/table/figures)
  action-timeline per-task wing action traces for plotting
  serve-teleop    run the live teleoperation session server

Exit code 0 on success; on failure a machine-readable JSON error object is
printed to stderr and the exit code is nonzero.  The output root can also
be set with the PATAGIUM_OUT_ROOT environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import demos, harness, plotting
from .config import Config, load_config
from .errors import PatagiumError
from .trajectory import build_reference, verify_impulse
from .wing import slider_position, solve_output_angle, wing_polygon


def _out_dir(args) -> Path:
    root = os.environ.get("PATAGIUM_OUT_ROOT")
    out = Path(args.out) if args.out else Path(root or "out")
    if root and args.out and not Path(args.out).is_absolute():
        out = Path(root) / args.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_cfg(args) -> Config:
    return load_config(args.config)


def cmd_gen_traj(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    traj = build_reference(
        args.total_time, math.radians(args.theta_min), math.radians(args.theta_max),
        mass=cfg.robot.mass, rest_time=cfg.trajectory.rest_time,
        dec_phase_ratio=cfg.trajectory.dec_phase_ratio,
        acc_phase_ratio=cfg.trajectory.acc_phase_ratio,
    )
    n = int(round(traj.end_time * traj.sample_rate))
    ts = np.arange(n + 1) / traj.sample_rate
    ts = np.minimum(ts, traj.end_time)
    arr = traj.sample_arrays(ts)
    data = np.stack([ts, np.degrees(arr["theta_ref"]), arr["F_x_ref"], arr["phase"]], axis=-1)
    csv_path = out / f"reference_T{args.total_time:.1f}.csv"
    np.savetxt(csv_path, data, delimiter=",", header="t,theta_ref_deg,F_x,phase", comments="")
    plotting.save_reference_figure(traj, csv_path.with_suffix(".png"))
    print(f"wrote {csv_path} (net impulse {verify_impulse(traj):.3e} N s)")
    return 0


def cmd_sweep_wing(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    geom = cfg.wing.geometry()
    thetas = np.linspace(geom.servo_min, geom.servo_max, args.samples)
    rows, outs, areas, nv = [], [], [], []
    for th in thetas:
        th = float(th)
        tb = solve_output_angle(geom, th)
        pf, pb = slider_position(geom, th)
        poly = wing_polygon(geom, th)
        rows.append([th, tb, pf[0], pf[1], pb[0], pb[1], poly.area])
        outs.append(tb)
        areas.append(poly.area)
        nv.append(poly.n_vertices)
    csv_path = out / "wing_sweep.csv"
    np.savetxt(csv_path, np.asarray(rows), delimiter=",",
               header="theta0_rad,thetaB_rad,slider_front_x_m,slider_front_y_m,"
                      "slider_back_x_m,slider_back_y_m,area_m2",
               comments="")
    plotting.save_wing_sweep_figure(thetas, np.array(outs), np.array(areas), np.array(nv),
                                    csv_path.with_suffix(".png"))
    print(f"wrote {csv_path}")
    return 0


def cmd_demo(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    demo_root = out / "demos"
    if args.action == "record":
        demos.collect_demo_library(cfg, demo_root, seed=args.seed)
        n = len(demos.load_library(demo_root))
        print(f"recorded demonstration library under {demo_root} ({n} logs)")
    elif args.action == "augment":
        originals = [demos.load_log(p) for p in sorted((demo_root / "originals").glob("*.csv"))]
        count = 0
        for k, log in enumerate(originals):
            for aug in demos.augment(log, cfg.demo.copies_per_original, seed=args.seed + 1000 + k, cfg=cfg):
                demos.save_log(aug, demo_root / "augmented")
                count += 1
        print(f"wrote {count} augmented logs")
    elif args.action == "windows":
        logs = demos.load_library(demo_root)
        windows, targets, _ = demos.build_windows(logs)
        path = demos.save_windows(windows, targets, demo_root / "windows" / "windows.npz")
        print(f"wrote {path} ({len(windows)} windows from {len(logs)} logs)")
    return 0


def cmd_pretrain(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    windows_path = out / "demos" / "windows" / "windows.npz"
    if windows_path.exists():
        windows, targets = demos.load_windows(windows_path)
    else:
        _, windows, targets = harness.prepare_demos(cfg, out, seed=args.seed)
    result = harness.run_pretraining(cfg, out, windows, targets, seed=args.seed, epochs=args.epochs)
    print(f"pretrained base policy: final val MAE {result.val_mae[-1]:.4f} "
          f"({len(result.train_losses)} epochs); bundle under {out / 'policies'}")
    return 0


def cmd_train_residual(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    base, _, _ = harness.load_policies(cfg, out)
    trained = harness.train_residuals(cfg, out, base, seed=args.seed, iterations=args.iterations)
    for duration, (_, _, hist) in trained.items():
        tail = np.mean(hist.episode_returns[-5:]) if hist.episode_returns else float("nan")
        print(f"T={duration:.1f}s: trained {hist.iterations} iterations, tail return {tail:.2f}")
    return 0


def cmd_train_naive(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    base, _, _ = harness.load_policies(cfg, out)
    trained = harness.train_naives(cfg, out, base.normalizer, seed=args.seed, iterations=args.iterations)
    for duration, (_, _, hist) in trained.items():
        tail = np.mean(hist.episode_returns[-5:]) if hist.episode_returns else float("nan")
        print(f"T={duration:.1f}s: trained naive baseline, tail return {tail:.2f}")
    return 0


def cmd_eval_policy(args):
    from .policy import residual_action_source, naive_action_source, base_action_source, rollout_policy

    cfg = _load_cfg(args)
    out = _out_dir(args)
    base, residuals, naives = harness.load_policies(cfg, out)
    traj = harness.task_reference(cfg, args.total_time)
    if args.kind == "residual":
        actor = residuals[args.total_time][0]
        source = residual_action_source(base, actor, actor.c_aux)
    elif args.kind == "naive":
        source = naive_action_source(naives[args.total_time][0])
    else:
        source = base_action_source(base)
    roll = rollout_policy(cfg, traj, source, n_envs=args.envs, seed=args.seed)
    print(json.dumps(dict(
        kind=args.kind, task=args.total_time,
        v_B=float(np.mean(roll["v_B"])), v_E=float(np.mean(roll["v_E"])),
        delta_v=float(np.mean(roll["delta_v"])),
        mean_reward=float(np.mean(roll["total_reward"])),
    ), indent=1))
    return 0


def cmd_compare(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    base, residuals, naives = harness.load_policies(cfg, out)
    report = harness.run_comparison(cfg, out, base, residuals, naives or None,
                                    replay=not args.no_replay)
    print(report.to_table())
    print(f"report under {out / 'comparison'}")
    return 0


def cmd_action_timeline(args):
    cfg = _load_cfg(args)
    out = _out_dir(args)
    base, residuals, naives = harness.load_policies(cfg, out)
    harness.action_timeline(cfg, out, base, residuals, naives, seed=args.seed)
    print(f"timelines under {out / 'timelines'}")
    return 0


def cmd_serve_teleop(args):
    import uvicorn

    from .teleop import build_app

    cfg = _load_cfg(args)
    if args.slowmo:
        cfg.teleop.slowmo = args.slowmo
    app = build_app(cfg, total_time=args.traj, out_dir=_out_dir(args) / "sessions")
    uvicorn.run(app, host=args.host, port=args.port or cfg.teleop.port, log_level="warning")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="patagium", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="YAML config overlay")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output directory (default ./out)")

    p = sub.add_parser("gen-traj", help="emit a braking reference CSV")
    common(p)
    p.add_argument("--total-time", type=float, required=True)
    p.add_argument("--theta-min", type=float, default=-40.0, help="deg")
    p.add_argument("--theta-max", type=float, default=70.0, help="deg")
    p.set_defaults(fn=cmd_gen_traj)

    p = sub.add_parser("sweep-wing", help="servo sweep CSV: angles, sliders, area")
    common(p)
    p.add_argument("--samples", type=int, default=721)
    p.set_defaults(fn=cmd_sweep_wing)

    p = sub.add_parser("demo", help="demonstration library operations")
    common(p)
    p.add_argument("action", choices=["record", "augment", "windows"])
    p.set_defaults(fn=cmd_demo)

    p = sub.add_parser("pretrain", help="supervised pretraining of the base policy")
    common(p)
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(fn=cmd_pretrain)

    p = sub.add_parser("train-residual", help="residual PPO per task")
    common(p)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(fn=cmd_train_residual)

    p = sub.add_parser("train-naive", help="naive PPO baseline per task")
    common(p)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(fn=cmd_train_naive)

    p = sub.add_parser("eval-policy", help="roll out a trained policy")
    common(p)
    p.add_argument("--kind", choices=["residual", "naive", "base"], default="residual")
    p.add_argument("--total-time", type=float, default=2.0)
    p.add_argument("--envs", type=int, default=8)
    p.set_defaults(fn=cmd_eval_policy)

    p = sub.add_parser("compare", help="nominal vs residual deceleration report")
    common(p)
    p.add_argument("--no-replay", action="store_true",
                   help="evaluate the residual closed-loop instead of replaying its action sequence")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("action-timeline", help="per-task action traces")
    common(p)
    p.set_defaults(fn=cmd_action_timeline)

    p = sub.add_parser("serve-teleop", help="live teleoperation server")
    common(p)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--traj", type=float, default=2.0, help="task total time, s")
    p.add_argument("--slowmo", type=float, default=None)
    p.set_defaults(fn=cmd_serve_teleop)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PatagiumError as exc:
        json.dump(dict(error=type(exc).__name__, message=str(exc)), sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (OSError, ValueError) as exc:
        json.dump(dict(error=type(exc).__name__, message=str(exc)), sys.stderr)
        sys.stderr.write("\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
