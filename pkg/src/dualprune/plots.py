"""Figure rendering for the report paths; every figure lands next to its CSV."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .coreset import CoresetManifest, NoiseReport
from .sampler import BetaParams, beta_pdf
from .synthetic import TwoPointTrajectory


def render_moon(moon: np.ndarray, path, manifest: CoresetManifest | None = None) -> None:
    """Scatter of per-sample (prediction std, prediction mean)."""
    fig, ax = plt.subplots(figsize=(5, 4.2))
    if manifest is not None:
        kept, pruned = manifest.kept, manifest.pruned
        ax.scatter(moon[pruned, 0], moon[pruned, 1], s=9, c="tab:blue", alpha=0.6, label="pruned")
        ax.scatter(moon[kept, 0], moon[kept, 1], s=9, c="tab:red", alpha=0.6, label="kept")
        ax.legend(frameon=False)
    else:
        ax.scatter(moon[:, 0], moon[:, 1], s=9, c="tab:purple", alpha=0.6)
    ax.set_xlabel("prediction std")
    ax.set_ylabel("prediction mean")
    ax.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_noise_report(report: NoiseReport, path) -> None:
    fig, ax = plt.subplots(figsize=(4.4, 3.6))
    bars = ["pruned noise\nfraction", "noise recall"]
    vals = [report.pruned_noise_fraction, report.noise_recall]
    ax.bar(bars, vals, color=["tab:blue", "tab:red"], width=0.5)
    ax.axhline(report.optimal_recall, ls="--", c="k", lw=1, label="optimal recall")
    ax.set_ylim(0, 1.05)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_beta_pdf(params_by_r: dict[float, BetaParams], path) -> None:
    xs = np.linspace(1e-3, 1 - 1e-3, 400)
    fig, ax = plt.subplots(figsize=(5, 3.8))
    for r, params in sorted(params_by_r.items()):
        ax.plot(xs, beta_pdf(xs, params), label=f"r={r:g}")
    ax.set_xlabel("prediction mean")
    ax.set_ylabel("selection density")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trajectory(traj: TwoPointTrajectory, path) -> None:
    """Four-panel summary: outputs, window stats with crossings, the two
    monotone ratio series, and the cumulative moon path."""
    fig, axes = plt.subplots(2, 2, figsize=(9.5, 7))

    ax = axes[0, 0]
    ax.plot(traj.sig1, label="sigma(y1)", c="tab:red")
    ax.plot(traj.sig2, label="sigma(y2)", c="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("output probability")
    ax.legend(frameon=False)

    ax = axes[0, 1]
    ax.plot(traj.v1, label="V1", c="tab:red")
    ax.plot(traj.v2, label="V2", c="tab:blue")
    ax.plot(traj.v1 * (1 - traj.mu1), label="V1(1-mu1)", c="tab:red", ls="--")
    ax.plot(traj.v2 * (1 - traj.mu2), label="V2(1-mu2)", c="tab:blue", ls="--")
    if traj.t_v is not None:
        ax.axvline(traj.t_v, c="k", lw=1, label=f"T_v={traj.t_v}")
    if traj.t_vm is not None:
        ax.axvline(traj.t_vm, c="gray", lw=1, ls=":", label=f"T_vm={traj.t_vm}")
    ax.set_xlabel("window start t")
    ax.set_yscale("log")
    ax.legend(frameon=False, fontsize=8)

    ax = axes[1, 0]
    if len(traj.gamma_v):
        ax.plot(traj.gamma_v, label="gamma_V", c="tab:green")
    if len(traj.gamma_m):
        ax.plot(traj.gamma_m, label="gamma_M", c="tab:orange")
    ax.set_xlabel("t")
    ax.set_yscale("log")
    ax.legend(frameon=False)

    ax = axes[1, 1]
    t = np.arange(1, traj.t_max + 1)
    std1 = [traj.sig1[: k + 1].std(ddof=1) for k in t]
    std2 = [traj.sig2[: k + 1].std(ddof=1) for k in t]
    mean1 = [traj.sig1[: k + 1].mean() for k in t]
    mean2 = [traj.sig2[: k + 1].mean() for k in t]
    ax.plot(std1, mean1, c="tab:red", marker="o", ms=2, lw=0.8, label="x1")
    ax.plot(std2, mean2, c="tab:blue", marker="x", ms=2, lw=0.8, label="x2")
    ax.set_xlabel("prediction std (cumulative)")
    ax.set_ylabel("prediction mean (cumulative)")
    ax.legend(frameon=False)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
