"""Matplotlib figures rendered next to the delimited stage outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graph import DegreeStats


def _figdir(outdir: Path) -> Path:
    path = Path(outdir) / "figures"
    path.mkdir(parents=True, exist_ok=True)
    return path


def plot_weight_histogram(stats: DegreeStats, outdir: Path) -> Path:
    path = _figdir(outdir) / "weight_histogram.png"
    weights = sorted(stats.weight_histogram)
    counts = [stats.weight_histogram[w] for w in weights]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(weights, counts, color="#4878a8", width=0.8)
    ax.set_xlabel("edge weight (co-occurring chains)")
    ax.set_ylabel("edges")
    if counts and max(counts) > 50 * max(1, min(counts)):
        ax.set_yscale("log")
    ax.set_title(f"{stats.node_count} nodes, {stats.edge_count} edges")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_score_distribution(scores: np.ndarray, outdir: Path) -> Path:
    path = _figdir(outdir) / "centrality_distribution.png"
    ranked = np.sort(scores)[::-1]
    positive = ranked[ranked > 0]
    fig, ax = plt.subplots(figsize=(6, 4))
    if positive.size:
        ax.plot(np.arange(1, positive.size + 1), positive, lw=1.2, color="#a85448")
        ax.set_xscale("log")
        ax.set_yscale("log")
    zero_share = 1.0 - positive.size / max(1, scores.size)
    ax.set_xlabel("rank")
    ax.set_ylabel("betweenness")
    ax.set_title(f"betweenness by rank ({zero_share:.0%} of nodes at zero)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_label_counts(counts: dict[str, int], outdir: Path) -> Path:
    path = _figdir(outdir) / "label_counts.png"
    names = list(counts)
    values = [counts[name] for name in names]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(names, values, color=["#48a868", "#4878a8", "#a89648"][: len(names)])
    ax.set_ylabel("edges")
    ax.set_title("edge labels")
    for i, value in enumerate(values):
        ax.text(i, value, str(value), ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_eval_metrics(metrics: dict[str, float | None], outdir: Path) -> Path:
    path = _figdir(outdir) / "evaluation_metrics.png"
    names = [k for k, v in metrics.items() if v is not None]
    values = [metrics[k] for k in names]
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.bar(names, values, color="#4878a8")
    ax.set_ylim(0, max(1.05, max(values, default=1.0) * 1.1))
    for i, value in enumerate(values):
        ax.text(i, value, f"{value:.3f}", ha="center", va="bottom", fontsize=9)
    ax.set_title("evaluation against reference")
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
