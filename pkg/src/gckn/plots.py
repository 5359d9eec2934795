"""Figure rendering for the CLI report paths. Everything writes straight to
file via the Agg backend; no display is ever opened."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graphs import Graph
from .interpret import Motif


def save_fold_accuracy_figure(result, path, title: str = ""):
    """Bar chart of per-fold test accuracy with the mean as a dashed line."""
    accs = [r.test_acc for r in result.rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(range(len(accs)), accs, color="#4878a8")
    ax.axhline(result.mean, color="#a84848", linestyle="--",
               label=f"mean {result.mean:.3f} +/- {result.std:.3f}")
    ax.set_xlabel("fold")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_gram_heatmap(matrix: np.ndarray, path, title: str = ""):
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(matrix, cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("graph")
    ax.set_ylabel("graph")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _spring_layout(n_nodes: int, edges, seed: int = 0, iters: int = 120):
    """Small deterministic force layout; good enough for motif-sized graphs."""
    rng = np.random.default_rng(seed)
    pos = rng.normal(scale=0.5, size=(n_nodes, 2))
    if n_nodes == 1:
        return np.zeros((1, 2))
    k = 1.0 / np.sqrt(n_nodes)
    for it in range(iters):
        disp = np.zeros_like(pos)
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(diff, axis=2) + 1e-9
        rep = (k * k / dist ** 2)[:, :, None] * diff
        disp += rep.sum(axis=1)
        for u, v in edges:
            d = pos[u] - pos[v]
            norm = np.linalg.norm(d) + 1e-9
            pull = (norm / k) * (d / norm)
            disp[u] -= pull
            disp[v] += pull
        step = 0.1 * (1.0 - it / iters)
        lengths = np.linalg.norm(disp, axis=1) + 1e-9
        pos += disp / lengths[:, None] * np.minimum(lengths, step)[:, None]
    return pos


def save_motif_figure(graph: Graph, motif: Motif, path, title: str = ""):
    """The whole graph in light gray with the motif's edges highlighted and
    scaled by their contribution scores."""
    pos = _spring_layout(graph.n_nodes, graph.edges, seed=7)
    fig, ax = plt.subplots(figsize=(5, 5))
    for u, v in graph.edges:
        ax.plot(*zip(pos[u], pos[v]), color="0.8", linewidth=1.0, zorder=1)
    max_score = max(motif.edge_scores) if motif.edge_scores else 1.0
    for (u, v), s in zip(motif.edges, motif.edge_scores):
        ax.plot(*zip(pos[u], pos[v]), color="#c0392b",
                linewidth=1.0 + 3.0 * s / max_score, zorder=2)
    in_motif = set(motif.nodes)
    colors = ["#c0392b" if u in in_motif else "0.6" for u in range(graph.n_nodes)]
    ax.scatter(pos[:, 0], pos[:, 1], c=colors, s=120, zorder=3)
    if graph.label_vocabulary is not None:
        labels = [graph.label_vocabulary[int(np.argmax(row))]
                  for row in graph.attributes]
    else:
        labels = list(range(graph.n_nodes))
    for u, (x, y) in enumerate(pos):
        ax.annotate(str(labels[u]), (x, y), ha="center", va="center",
                    fontsize=7, color="white", zorder=4)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_embedding_scatter(x: np.ndarray, y, path, title: str = ""):
    """2-D principal-component projection of the embeddings, one color per
    class."""
    centered = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    proj = centered @ vt[:2].T if vt.shape[0] >= 2 else np.column_stack(
        [centered @ vt[0], np.zeros(len(centered))])
    fig, ax = plt.subplots(figsize=(5, 4.2))
    y = np.asarray(y)
    for cls in np.unique(y):
        sel = y == cls
        ax.scatter(proj[sel, 0], proj[sel, 1], label=f"class {cls}", s=18)
    ax.set_xlabel("pc 1")
    ax.set_ylabel("pc 2")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
