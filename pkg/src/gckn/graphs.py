"""In-memory undirected graphs with dense node attributes.

Graphs are immutable after construction: adjacency is stored as nested tuples
and the attribute matrix is marked read-only, so instances can be shared
freely across worker threads/processes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AttributeShapeMismatchError,
    DuplicateEdgeError,
    NodeIndexError,
    SelfLoopError,
    UnknownLabelError,
)

_uid_counter = itertools.count()


@dataclass(frozen=True)
class AttributeEncoding:
    """How raw node data was turned into attribute rows.

    mode is "one-hot" (vocabulary gives the column order) or "continuous"
    (mean/std optionally hold per-dimension standardization statistics,
    with std fixed to 1 for zero-variance dimensions).
    """

    mode: str
    vocabulary: Optional[tuple] = None
    mean: Optional[np.ndarray] = None
    std: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in ("one-hot", "continuous"):
            raise ValueError(f"unknown encoding mode {self.mode!r}")
        if self.vocabulary is not None:
            if len(set(self.vocabulary)) != len(self.vocabulary):
                raise ValueError("vocabulary entries must be unique")
        if self.std is not None and np.any(np.asarray(self.std) <= 0):
            raise ValueError("standardization stddev entries must be > 0")


@dataclass(frozen=True)
class Graph:
    """Undirected graph with per-node attribute vectors.

    edges hold each undirected edge once as (u, v) with u < v; adjacency
    lists are sorted ascending. label_vocabulary is present iff attributes
    are a one-hot encoding of categorical node labels.
    """

    n_nodes: int
    edges: tuple
    adjacency: tuple
    attributes: np.ndarray
    label_vocabulary: Optional[tuple] = None
    uid: int = field(default_factory=lambda: next(_uid_counter))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def attr_dim(self) -> int:
        return self.attributes.shape[1]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.adjacency], dtype=np.int64)


def build_graph(n_nodes, edges, attributes, label_vocabulary=None) -> Graph:
    """Validate and assemble a Graph.

    Rejects out-of-range endpoints, self-loops, duplicate edges and
    attribute row-count mismatches. Edge direction in the input is
    irrelevant; (u, v) and (v, u) count as duplicates.
    """
    attributes = np.ascontiguousarray(attributes, dtype=np.float64)
    if attributes.ndim != 2 or attributes.shape[0] != n_nodes:
        raise AttributeShapeMismatchError(
            f"attributes shape {attributes.shape} does not match {n_nodes} nodes"
        )
    if attributes.shape[1] < 1:
        raise AttributeShapeMismatchError("attribute dimension must be >= 1")

    seen = set()
    canonical = []
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            raise NodeIndexError(f"edge ({u}, {v}) out of range for {n_nodes} nodes")
        if u == v:
            raise SelfLoopError(f"self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdgeError(f"duplicate edge {key}")
        seen.add(key)
        canonical.append(key)

    neighbors = [[] for _ in range(n_nodes)]
    for u, v in canonical:
        neighbors[u].append(v)
        neighbors[v].append(u)
    adjacency = tuple(tuple(sorted(nb)) for nb in neighbors)

    attributes.setflags(write=False)
    return Graph(
        n_nodes=n_nodes,
        edges=tuple(sorted(canonical)),
        adjacency=adjacency,
        attributes=attributes,
        label_vocabulary=tuple(label_vocabulary) if label_vocabulary is not None else None,
    )


def one_hot_encode(raw_labels: Sequence, vocabulary: Sequence) -> np.ndarray:
    """One-hot rows over `vocabulary` order; width == len(vocabulary)."""
    index = {lab: i for i, lab in enumerate(vocabulary)}
    out = np.zeros((len(raw_labels), len(vocabulary)), dtype=np.float64)
    for row, lab in enumerate(raw_labels):
        if lab not in index:
            raise UnknownLabelError(f"label {lab!r} not in vocabulary")
        out[row, index[lab]] = 1.0
    return out


def degrees_as_labels(graph: Graph, vocabulary=None) -> Graph:
    """Replace attributes with a one-hot encoding of node degrees.

    vocabulary defaults to the sorted degrees of this graph; pass the
    dataset-wide degree vocabulary when encoding a whole dataset.
    """
    degs = [graph.degree(u) for u in range(graph.n_nodes)]
    if vocabulary is None:
        vocabulary = sorted(set(degs))
    attrs = one_hot_encode(degs, vocabulary)
    return build_graph(graph.n_nodes, graph.edges, attrs, label_vocabulary=vocabulary)


def categorical_labels(graph: Graph) -> np.ndarray:
    """Integer label index per node, derived from one-hot attribute rows."""
    from .errors import ContinuousAttributesUnsupportedError

    attrs = graph.attributes
    is_one = attrs == 1.0
    if not (np.all((attrs == 0.0) | is_one) and np.all(is_one.sum(axis=1) == 1)):
        raise ContinuousAttributesUnsupportedError(
            "node attributes are not one-hot; categorical labels undefined"
        )
    return np.argmax(attrs, axis=1)


def permute_nodes(graph: Graph, perm: Sequence[int]) -> Graph:
    """Relabel nodes: new index perm[u] plays the role of old index u."""
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(graph.n_nodes)):
        raise ValueError("perm must be a permutation of node indices")
    new_edges = [(int(perm[u]), int(perm[v])) for u, v in graph.edges]
    new_attrs = np.empty_like(graph.attributes)
    new_attrs[perm] = graph.attributes
    return build_graph(graph.n_nodes, new_edges, new_attrs,
                       label_vocabulary=graph.label_vocabulary)
