"""Figure rendering for report outputs (PNG files next to the CSVs)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def save_reference_figure(traj, path):
    ts = np.linspace(0.0, traj.end_time, 1200)
    arr = traj.sample_arrays(ts)
    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    axes[0].plot(ts, np.degrees(arr["theta_ref"]), "b-")
    axes[0].set_ylabel("reference pitch [deg]")
    axes[1].plot(ts, arr["F_x_ref"], "r-")
    axes[1].set_ylabel("F_x [N]")
    axes[1].set_xlabel("time [s]")
    for ax in axes:
        for tj, label in [(traj.t_A, "A"), (traj.t_B, "B"), (traj.t_C, "C"), (traj.t_D, "D")]:
            ax.axvline(tj, color="gray", lw=0.6, ls="--")
        ax.grid(True, alpha=0.3)
    for tj, label in [(traj.t_A, "A"), (traj.t_B, "B"), (traj.t_C, "C"), (traj.t_D, "D")]:
        axes[0].text(tj, np.degrees(traj.theta_max) * 0.95, label, ha="center")
    fig.suptitle(f"braking reference, total {traj.total_time:.1f} s")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_wing_sweep_figure(thetas, outs, areas, n_vertices, path):
    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
    axes[0].plot(np.degrees(thetas), np.degrees(outs))
    axes[0].set_ylabel("rocker angle [deg]")
    axes[1].plot(np.degrees(thetas), areas)
    axes[1].set_ylabel("membrane area [m^2]")
    axes[2].step(np.degrees(thetas), n_vertices, where="post")
    axes[2].set_ylabel("polygon vertices")
    axes[2].set_xlabel("servo angle [deg]")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_comparison_figure(rows, path):
    """Grouped bars of decreased velocity per task and controller."""
    tasks = sorted({r["task"] for r in rows})
    controllers = sorted({r["controller"] for r in rows})
    fig, ax = plt.subplots(figsize=(8, 5))
    width = 0.8 / len(controllers)
    for ci, ctrl in enumerate(controllers):
        vals = []
        for task in tasks:
            sel = [r["delta_v"] for r in rows if r["task"] == task and r["controller"] == ctrl]
            vals.append(np.mean(sel) if sel else np.nan)
        ax.bar(np.arange(len(tasks)) + ci * width, vals, width, label=ctrl)
    ax.set_xticks(np.arange(len(tasks)) + 0.4 - width / 2)
    ax.set_xticklabels([f"{t:.1f} s" for t in tasks])
    ax.set_ylabel("decreased velocity during deceleration [m/s]")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_action_timeline_figure(timelines, path):
    """timelines: {task: {controller: (t, actions)}}, phase marks included."""
    tasks = sorted(timelines)
    fig, axes = plt.subplots(len(tasks), 1, figsize=(8, 3 * len(tasks)), sharex=False)
    if len(tasks) == 1:
        axes = [axes]
    for ax, task in zip(axes, tasks):
        for ctrl, (t, act, marks) in sorted(timelines[task].items()):
            ax.plot(t, act, label=ctrl)
        for tj in marks:
            ax.axvline(tj, color="gray", lw=0.6, ls="--")
        ax.set_ylabel(f"{task:.1f} s task\nwing action")
        ax.set_ylim(-0.05, 1.05)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper left", fontsize=8)
    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_curve_figure(values, ylabel, path, second=None, second_label=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(values, label=ylabel)
    if second is not None:
        ax2 = ax.twinx()
        ax2.plot(second, color="tab:orange", label=second_label)
        ax2.set_ylabel(second_label)
    ax.set_xlabel("epoch / iteration")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
