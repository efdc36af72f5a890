"""Optional figures rendered next to the CSV outputs (``--plots``)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import attitude_error_angles  # noqa: E402


def plot_run(log, out: str | Path, title: str = "") -> list[Path]:
    """Position tracking, attitude error and rotor thrusts; returns the written paths."""
    out = Path(out)
    paths = []

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 6))
    for i, (ax, name) in enumerate(zip(axes, "xyz")):
        ax.plot(log.t, log.pos[:, i], label="actual")
        ax.plot(log.t, log.ref_pos[:, i], "--", label="reference")
        ax.set_ylabel(f"{name} [m]")
    axes[0].legend(loc="best", fontsize="small")
    axes[-1].set_xlabel("t [s]")
    fig.suptitle(title or "position")
    fig.tight_layout()
    paths.append(out / "position.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax1.plot(log.t, np.degrees(attitude_error_angles(log.q, log.q_d)))
    ax1.set_ylabel("attitude error [deg]")
    for j in range(log.u.shape[1]):
        ax2.plot(log.t, log.u[:, j], lw=0.8, label=f"u{j + 1}")
    for bound in (log.meta.get("f_min"), log.meta.get("f_max")):
        if bound is not None:
            ax2.axhline(bound, color="k", ls=":", lw=0.8)
    ax2.set_ylabel("rotor thrust [N]")
    ax2.set_xlabel("t [s]")
    ax2.legend(loc="best", fontsize="small", ncol=4)
    fig.tight_layout()
    paths.append(out / "attitude_thrust.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)
    return paths


def plot_comparison(logs: dict, out: str | Path, title: str = "") -> Path:
    """Position-error norm of each controller on one axis."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for name, log in logs.items():
        ax.plot(log.t, np.linalg.norm(log.pos - log.ref_pos, axis=1), label=name)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|position error| [m]")
    ax.set_yscale("log")
    ax.legend(loc="best", fontsize="small")
    ax.set_title(title)
    fig.tight_layout()
    path = Path(out) / "comparison.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
