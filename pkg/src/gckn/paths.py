"""Exhaustive enumeration of fixed-length paths and walks from every node.

A path visits distinct vertices; a walk may revisit. Both are directed
traversals, so [u, v] and [v, u] are listed separately under their own start
node. Enumeration cost is O(|V| d^k) in the worst case, so a hard cap guards
against memory blowup on dense graphs.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import PathCapExceededError
from .graphs import Graph

DEFAULT_PATH_CAP = 10_000_000


@dataclass(frozen=True)
class PathTable:
    """All length-k traversals of one graph, grouped by start node.

    flat is an (n_traversals, k+1) int array, sorted lexicographically
    within each start-node group; offsets[u]:offsets[u+1] slices out the
    rows starting at node u. mode is "path" or "walk".
    """

    k: int
    mode: str
    flat: np.ndarray
    offsets: np.ndarray

    @property
    def n_total(self) -> int:
        return self.flat.shape[0]

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def for_node(self, u: int) -> np.ndarray:
        return self.flat[self.offsets[u]:self.offsets[u + 1]]

    def per_node_lists(self):
        return [self.for_node(u).tolist() for u in range(len(self.offsets) - 1)]


def _enumerate(graph: Graph, k: int, distinct: bool, cap: int) -> PathTable:
    if k < 0:
        raise ValueError("k must be >= 0")
    n = graph.n_nodes
    adjacency = graph.adjacency
    rows = []
    offsets = np.zeros(n + 1, dtype=np.int64)
    # Adjacency lists are sorted, so depth-first extension emits each
    # node's traversals already in lexicographic order.
    for start in range(n):
        stack = [(start,)]
        while stack:
            seq = stack.pop()
            if len(seq) == k + 1:
                rows.append(seq)
                if len(rows) > cap:
                    raise PathCapExceededError(
                        f"more than {cap} length-{k} traversals; raise the cap "
                        "or use a smaller k"
                    )
                continue
            last = seq[-1]
            for nb in reversed(adjacency[last]):
                if distinct and nb in seq:
                    continue
                stack.append(seq + (nb,))
        offsets[start + 1] = len(rows)
    flat = np.array(rows, dtype=np.int64) if rows else np.zeros((0, k + 1), dtype=np.int64)
    flat.setflags(write=False)
    offsets.setflags(write=False)
    return PathTable(k=k, mode="path" if distinct else "walk", flat=flat, offsets=offsets)


def enumerate_paths(graph: Graph, k: int, cap: int = DEFAULT_PATH_CAP) -> PathTable:
    """All paths (distinct vertices) of length k from each node."""
    return _enumerate(graph, k, distinct=True, cap=cap)


def enumerate_walks(graph: Graph, k: int, cap: int = DEFAULT_PATH_CAP) -> PathTable:
    """All walks (repeats allowed) of length k from each node."""
    return _enumerate(graph, k, distinct=False, cap=cap)


def path_attribute_vector(graph: Graph, path) -> np.ndarray:
    """Concatenated attribute rows along a traversal, in visit order."""
    idx = np.asarray(path, dtype=np.int64)
    return graph.attributes[idx].reshape(-1)


def path_matrix(graph: Graph, table: PathTable, features: np.ndarray | None = None) -> np.ndarray:
    """Stack attribute vectors of every traversal in `table` into a matrix.

    features overrides graph.attributes (used for upper layers, where the
    per-node inputs are the previous layer's outputs).
    """
    feats = graph.attributes if features is None else features
    if table.n_total == 0:
        return np.zeros((0, feats.shape[1] * (table.k + 1)))
    return feats[table.flat].reshape(table.n_total, -1)


class PathCache:
    """Keyed store of PathTables: (graph.uid, k, mode) -> table.

    Entries are deterministic, so concurrent duplicated work is benign;
    the lock only protects the dict itself.
    """

    def __init__(self, cap: int = DEFAULT_PATH_CAP):
        self.cap = cap
        self._store = {}
        self._lock = threading.Lock()

    def get(self, graph: Graph, k: int, mode: str = "path") -> PathTable:
        key = (graph.uid, k, mode)
        with self._lock:
            hit = self._store.get(key)
        if hit is not None:
            return hit
        fn = enumerate_paths if mode == "path" else enumerate_walks
        table = fn(graph, k, cap=self.cap)
        with self._lock:
            self._store[key] = table
        return table

    def clear(self):
        with self._lock:
            self._store.clear()


shared_cache = PathCache()
