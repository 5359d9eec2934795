"""Exact graph kernels with hard (Dirac) attribute matching.

These serve both as classical baselines and as reference oracles for the
relaxed, Nystrom-approximated pipeline: path and walk kernels over attribute
sequences, the iterative-relabeling subtree kernel, and the two-level Dirac
kernel that compares whole sets of outgoing paths per node.

All operations require categorical node labels (one-hot attribute rows);
Dirac matching on continuous vectors is ill-posed and raises.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .graphs import Graph, categorical_labels
from .paths import enumerate_paths, enumerate_walks, path_matrix


# ---------------------------------------------------------------------------
# path / walk kernels

def _label_sequences(graph: Graph, k: int, mode: str) -> Counter:
    labels = categorical_labels(graph)
    table = enumerate_paths(graph, k) if mode == "path" else enumerate_walks(graph, k)
    return Counter(tuple(labels[row].tolist()) for row in table.flat)


def _histogram_dot(h1: Counter, h2: Counter) -> float:
    if len(h2) < len(h1):
        h1, h2 = h2, h1
    return float(sum(c * h2[t] for t, c in h1.items() if t in h2))


def exact_path_kernel(g1: Graph, g2: Graph, k: int, up_to: bool = False) -> float:
    """Number of matching attribute sequences over all path pairs.

    With up_to=True, sums the fixed-length kernels for lengths 0..k.
    """
    ks = range(k + 1) if up_to else (k,)
    return float(sum(
        _histogram_dot(_label_sequences(g1, i, "path"), _label_sequences(g2, i, "path"))
        for i in ks
    ))


def exact_walk_kernel(g1: Graph, g2: Graph, k: int) -> float:
    """Fixed-length walk kernel, computed by the neighbor-sum recursion.

    K_0(u,u') = delta(label u, label u');
    K_{j+1}(u,u') = delta(label u, label u') * sum over neighbor pairs of K_j.
    Equals the brute-force count of matching walk attribute sequences.
    """
    l1, l2 = categorical_labels(g1), categorical_labels(g2)
    delta = (l1[:, None] == l2[None, :]).astype(np.float64)
    a1 = adjacency_matrix(g1)
    a2 = adjacency_matrix(g2)
    kmat = delta
    for _ in range(k):
        kmat = delta * (a1 @ kmat @ a2.T)
    return float(kmat.sum())


def adjacency_matrix(graph: Graph) -> np.ndarray:
    a = np.zeros((graph.n_nodes, graph.n_nodes))
    for u, v in graph.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


# ---------------------------------------------------------------------------
# iterative relabeling (color refinement)

@dataclass(frozen=True)
class WlColoring:
    """Per-iteration compressed node labels: labels[i] is the length-n array
    after i refinement rounds (labels[0] = raw label indices)."""

    iterations: int
    labels: tuple  # tuple of np.ndarray, len iterations+1


def wl_relabel_joint(graphs, iterations: int):
    """Refine labels jointly so compressed ids are comparable across graphs.

    Each round maps the signature (own label, sorted neighbor-label multiset)
    to a dense integer via an explicit map built over all graphs at once;
    ids are assigned in sorted signature order for determinism.
    """
    current = [categorical_labels(g) for g in graphs]
    history = [[lab.copy() for lab in current]]
    for _ in range(iterations):
        sigs = []
        for g, lab in zip(graphs, current):
            sigs.append([
                (int(lab[u]), tuple(sorted(int(lab[v]) for v in g.adjacency[u])))
                for u in range(g.n_nodes)
            ])
        mapping = {s: i for i, s in enumerate(sorted({s for gs in sigs for s in gs}))}
        current = [np.array([mapping[s] for s in gs], dtype=np.int64) for gs in sigs]
        history.append([lab.copy() for lab in current])
    out = []
    for gi in range(len(graphs)):
        out.append(WlColoring(iterations=iterations,
                              labels=tuple(history[i][gi] for i in range(iterations + 1))))
    return out


def wl_relabel(graph: Graph, iterations: int) -> WlColoring:
    return wl_relabel_joint([graph], iterations)[0]


def wl_subtree_kernel(g1: Graph, g2: Graph, k: int) -> float:
    """Sum over rounds 0..k of the number of node pairs sharing a label."""
    c1, c2 = wl_relabel_joint([g1, g2], k)
    total = 0.0
    for i in range(k + 1):
        h1 = Counter(c1.labels[i].tolist())
        h2 = Counter(c2.labels[i].tolist())
        total += _histogram_dot(h1, h2)
    return float(total)


# ---------------------------------------------------------------------------
# two-level Dirac kernel over outgoing-path sets

def outgoing_path_multisets(graph: Graph, k: int):
    """Per node, the multiset (as a sorted tuple) of attribute sequences of
    its outgoing length-k paths."""
    labels = categorical_labels(graph)
    table = enumerate_paths(graph, k)
    out = []
    for u in range(graph.n_nodes):
        seqs = [tuple(labels[row].tolist()) for row in table.for_node(u)]
        out.append(tuple(sorted(seqs)))
    return out


def exact_k2_dirac(g1: Graph, g2: Graph, k1: int) -> float:
    """Number of node pairs whose outgoing length-k1 path multisets match."""
    m1 = Counter(outgoing_path_multisets(g1, k1))
    m2 = Counter(outgoing_path_multisets(g2, k1))
    return _histogram_dot(m1, m2)


# ---------------------------------------------------------------------------
# walk histogram features (node-level, used by expressiveness checks)

def walk_histograms(graph: Graph, k: int):
    """Per node, the Counter of attribute sequences over its length-k walks."""
    labels = categorical_labels(graph)
    table = enumerate_walks(graph, k)
    return [
        Counter(tuple(labels[row].tolist()) for row in table.for_node(u))
        for u in range(graph.n_nodes)
    ]


# ---------------------------------------------------------------------------
# continuous relaxation, computed exactly (no approximation)

def relaxed_path_kernel(g1: Graph, g2: Graph, k: int, alpha: float,
                        flavor: str = "gaussian-dot", mode: str = "path") -> float:
    """Soft-matching path kernel evaluated by the full double loop over path
    pairs. Exponential cost; intended as a verification oracle for the
    finite-dimensional embedding, not for production use."""
    from .layers import kernel_matrix

    t1 = (enumerate_paths if mode == "path" else enumerate_walks)(g1, k)
    t2 = (enumerate_paths if mode == "path" else enumerate_walks)(g2, k)
    p1 = path_matrix(g1, t1)
    p2 = path_matrix(g2, t2)
    if p1.shape[1] != p2.shape[1]:
        raise DimensionMismatchError("graphs have different attribute dimensions")
    if p1.shape[0] == 0 or p2.shape[0] == 0:
        return 0.0
    return float(kernel_matrix(p1, p2, alpha, flavor).sum())


# ---------------------------------------------------------------------------
# Gram matrices

_KERNELS = {
    "path": lambda g1, g2, k: exact_path_kernel(g1, g2, k),
    "walk": lambda g1, g2, k: exact_walk_kernel(g1, g2, k),
    "k2": lambda g1, g2, k: exact_k2_dirac(g1, g2, k),
}


def gram_matrix(graphs, kernel: str, k: int) -> np.ndarray:
    """Pairwise kernel values in dataset order. kernel is one of
    path | walk | wl | k2."""
    n = len(graphs)
    out = np.zeros((n, n))
    if kernel == "wl":
        colorings = wl_relabel_joint(graphs, k)
        hists = [
            [Counter(c.labels[i].tolist()) for i in range(k + 1)]
            for c in colorings
        ]
        for i in range(n):
            for j in range(i, n):
                val = sum(_histogram_dot(hists[i][it], hists[j][it]) for it in range(k + 1))
                out[i, j] = out[j, i] = val
        return out
    if kernel not in _KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; expected path|walk|wl|k2")
    fn = _KERNELS[kernel]
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = fn(graphs[i], graphs[j], k)
    return out


def write_gram_csv(matrix: np.ndarray, path):
    """CSV export, row/column order = dataset order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["g" + str(j) for j in range(matrix.shape[1])])
        for row in matrix:
            writer.writerow([repr(float(x)) for x in row])
