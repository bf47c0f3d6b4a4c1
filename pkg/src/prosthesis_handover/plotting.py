"""PNG figures for session reports (Agg backend, no display needed)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .kinematics import LANDMARKS, forward_kinematics, object_pose  # noqa: E402
from .mobility import compensation_cost  # noqa: E402

_COLORS = {"HP": "tab:red", "RP": "tab:blue"}
_SAVE = dict(dpi=120, metadata={"Software": None})


def plot_compensation(scn, reports: dict, path) -> Path:
    """Compensation cost over the approach, one panel per offset."""
    offsets = list(scn.p_task)
    fig, axes = plt.subplots(1, len(offsets), figsize=(4 * len(offsets), 3.2), sharey=True, squeeze=False)
    for ax, p in zip(axes[0], offsets):
        for cond, rep in sorted(reports.items()):
            for e in rep.entries:
                if e.p_task != p or e.trajectory is None:
                    continue
                psi = [compensation_cost(q, scn.subject.q_n, scn.impairment) for q in e.trajectory.q]
                ax.plot(e.trajectory.times, psi, color=_COLORS.get(cond, "k"), label=cond)
        ax.set_title(f"p_task = {p:+.2f} m")
        ax.set_xlabel("t [s]")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("compensation cost [rad$^2$]")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return Path(path)


def plot_final_postures(scn, reports: dict, path) -> Path:
    """Side (x-z) and top (x-y) views of the final skeleton per entry."""
    model = scn.model()
    fig, (side, top) = plt.subplots(1, 2, figsize=(9, 4))
    for cond, rep in sorted(reports.items()):
        color = _COLORS.get(cond, "k")
        for e in rep.entries:
            if e.trajectory is None:
                continue
            q = e.trajectory.q[-1]
            poses = forward_kinematics(model, q)
            pts = np.array([poses.position(n) for n in LANDMARKS])
            obj = object_pose(model, q, scn.grasp_offset).translation
            side.plot(pts[:, 0], pts[:, 2], "-o", color=color, ms=3, alpha=0.8)
            top.plot(pts[:, 0], pts[:, 1], "-o", color=color, ms=3, alpha=0.8)
            side.plot(obj[0], obj[2], "s", color=color, ms=5)
            top.plot(obj[0], obj[1], "s", color=color, ms=5)
    for ax, (xl, yl) in ((side, ("x [m]", "z [m]")), (top, ("x [m]", "y [m]"))):
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_aspect("equal", adjustable="datalim")
        ax.grid(alpha=0.3)
    handles = [plt.Line2D([], [], color=_COLORS[c], label=c) for c in sorted(reports) if c in _COLORS]
    side.legend(handles=handles)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return Path(path)


def plot_comparison(comparison, path) -> Path:
    """Bar chart of the mean percent change of RP relative to HP."""
    names = [m for m, v in comparison.mean_percent_change.items() if v is not None]
    vals = [comparison.mean_percent_change[m] for m in names]
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(names, vals, color=["tab:blue" if v < 0 else "tab:red" for v in vals])
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_ylabel("change vs HP [%]")
    ax.tick_params(axis="x", labelrotation=20)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return Path(path)


def render_session_figures(scn, reports: dict, comparison, out_dir) -> list:
    out_dir = Path(out_dir)
    paths = [
        plot_compensation(scn, reports, out_dir / "compensation.png"),
        plot_final_postures(scn, reports, out_dir / "postures.png"),
    ]
    if comparison is not None:
        paths.append(plot_comparison(comparison, out_dir / "comparison.png"))
    return paths
