"""Synthetic graph generators for demos and verification harnesses."""

from __future__ import annotations

import numpy as np

from .graphs import Graph, build_graph, one_hot_encode


def random_graph(rng, n_nodes: int, edge_prob: float, n_labels: int,
                 vocabulary=None) -> Graph:
    """Erdos-Renyi graph with one-hot labels from a shared vocabulary."""
    vocabulary = list(vocabulary) if vocabulary is not None else list(range(n_labels))
    edges = [(u, v) for u in range(n_nodes) for v in range(u + 1, n_nodes)
             if rng.random() < edge_prob]
    raw = [vocabulary[i] for i in rng.integers(0, len(vocabulary), size=n_nodes)]
    attrs = one_hot_encode(raw, vocabulary)
    return build_graph(n_nodes, edges, attrs, label_vocabulary=vocabulary)


def random_tree(rng, n_nodes: int) -> list:
    """Uniform-ish random tree edge list (random attachment)."""
    return [(int(rng.integers(0, u)), u) for u in range(1, n_nodes)]


def planted_motif_dataset(n_graphs: int, seed: int, n_decoy_labels: int = 5):
    """Binary classification where the signal is structural.

    Every graph is a random decoy tree (labels 0..n_decoy_labels-1) plus four
    extra nodes carrying the reserved label F = n_decoy_labels, attached at a
    random tree node. Positives wire the four F nodes as a clique (the
    motif); negatives wire them as a path. F-labeled nodes and F-F edges
    therefore appear in both classes; only the motif's shape separates them.

    Returns (graphs, labels, motif_edges) where motif_edges[i] is the set of
    planted clique edges for positives and an empty set for negatives.
    """
    rng = np.random.default_rng(seed)
    vocab = list(range(n_decoy_labels + 1))
    f_label = n_decoy_labels
    graphs, labels, motif_edges = [], [], []
    for i in range(n_graphs):
        positive = i % 2 == 1
        m = int(rng.integers(6, 10))
        edges = random_tree(rng, m)
        raw = [int(x) for x in rng.integers(0, n_decoy_labels, size=m)]
        extra = list(range(m, m + 4))
        raw += [f_label] * 4
        if positive:
            planted = [(a, b) for ai, a in enumerate(extra)
                       for b in extra[ai + 1:]]
        else:
            planted = list(zip(extra[:-1], extra[1:]))
        edges += planted
        edges.append((int(rng.integers(0, m)), extra[0]))
        attrs = one_hot_encode(raw, vocab)
        g = build_graph(m + 4, edges, attrs, label_vocabulary=vocab)
        graphs.append(g)
        labels.append(1 if positive else 0)
        motif_edges.append({(min(a, b), max(a, b)) for a, b in planted}
                           if positive else set())
    return graphs, labels, motif_edges
