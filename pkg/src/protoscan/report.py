"""File-rendered figures for clustering runs.

Everything here draws to files via the Agg backend (no display needed):
2-D cluster scatters with representatives and noise called out, the
per-iteration convergence panel, the k-distance elbow curve, and the
benchmark comparison bars.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import InputError


def plot_clusters(points, labels, status=None, reps=None, path="clusters.png",
                  title: str = "") -> str:
    """2-D scatter colored by cluster; noise black x, representatives red X."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise InputError("cluster scatter needs 2-D points")
    labels = np.asarray(labels).ravel()
    fig, ax = plt.subplots(figsize=(7, 7))
    clustered = labels >= 0
    if np.any(clustered):
        uniq = np.unique(labels[clustered])
        cmap = plt.get_cmap("tab20")
        for i, k in enumerate(uniq):
            sel = labels == k
            ax.scatter(points[sel, 0], points[sel, 1], s=6,
                       color=cmap(i % 20), label=f"cluster {k}" if uniq.size <= 12 else None)
    noise = labels < 0
    if np.any(noise):
        ax.scatter(points[noise, 0], points[noise, 1], s=24, c="black",
                   marker="x", linewidths=1.0, label="noise")
    if reps is not None and len(reps) > 0:
        ax.scatter(reps.coords[:, 0], reps.coords[:, 1], s=90, c="red",
                   marker="X", edgecolors="white", linewidths=0.5,
                   label="representatives", zorder=5)
    if title:
        ax.set_title(title)
    ax.set_aspect("equal", adjustable="datalim")
    handles, _ = ax.get_legend_handles_labels()
    if handles:
        ax.legend(loc="best", fontsize=8, markerscale=1.5)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_convergence(trace, path="convergence.png", title: str = "") -> str:
    """Four panels over iterations: instability, silhouette, noise, clusters."""
    records = [r.to_record() if hasattr(r, "to_record") else dict(r) for r in trace]
    if not records:
        raise InputError("empty trace")
    it = [r["iteration"] for r in records]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    panels = [
        ("delta", "pairwise instability", axes[0, 0]),
        ("silhouette", "silhouette (member subsample)", axes[0, 1]),
        ("n_noise", "noise members", axes[1, 0]),
        ("n_clusters", "clusters", axes[1, 1]),
    ]
    for key, label, ax in panels:
        ys = [r.get(key) for r in records]
        pts = [(x, y) for x, y in zip(it, ys) if y is not None]
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    forced = [r["iteration"] for r in records if r.get("forced_reset")]
    for x in forced:
        for _, _, ax in panels:
            ax.axvline(x, color="red", alpha=0.25, lw=1)
    axes[1, 0].set_xlabel("iteration")
    axes[1, 1].set_xlabel("iteration")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_kdist(curve, k: int, path="kdist.png", title: str = "") -> str:
    """Descending k-th neighbour distance curve (elbow diagnostic)."""
    curve = np.asarray(curve, dtype=np.float64).ravel()
    if curve.size == 0:
        raise InputError("empty k-distance curve")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(np.arange(curve.size), curve, lw=1.2)
    ax.set_xlabel("points (sorted)")
    ax.set_ylabel(f"{k}-th neighbour distance")
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_bench(result, path="bench.png", title: str = "") -> str:
    """Query-count and quality comparison between repeated runs and baseline."""
    data = result.to_dict() if hasattr(result, "to_dict") else dict(result)
    ipd, base = data["ipd"], data["dbscan"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4.2))
    q_mean = ipd["n_queries"]["mean"] or 0.0
    q_std = ipd["n_queries"]["std"] or 0.0
    ax1.bar(["incremental", "baseline"], [q_mean, base["n_queries"]],
            yerr=[q_std, 0.0], color=["#4878d0", "#ee854a"], capsize=4)
    ax1.set_ylabel("range queries")
    ax1.grid(alpha=0.3, axis="y")
    if "nmi" in base:
        n_mean = ipd["nmi"]["mean"] or 0.0
        n_std = ipd["nmi"]["std"] or 0.0
        ax2.bar(["incremental", "baseline"], [n_mean, base["nmi"]],
                yerr=[n_std, 0.0], color=["#4878d0", "#ee854a"], capsize=4)
        ax2.set_ylabel("NMI")
        ax2.set_ylim(0, 1.05)
    else:
        w_mean = ipd["wall_time"]["mean"] or 0.0
        w_std = ipd["wall_time"]["std"] or 0.0
        ax2.bar(["incremental", "baseline"], [w_mean, base["wall_time"]],
                yerr=[w_std, 0.0], color=["#4878d0", "#ee854a"], capsize=4)
        ax2.set_ylabel("wall time (s)")
    ax2.grid(alpha=0.3, axis="y")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)
