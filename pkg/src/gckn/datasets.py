"""TU-format benchmark loading, attribute standardization, stratified folds.

The flat-file layout (one record per line, node ids 1-based across the whole
dataset) follows the public benchmark collection:

    <name>_A.txt               "i, j" edge endpoints, both directions listed
    <name>_graph_indicator.txt graph id of node i on line i
    <name>_graph_labels.txt    one class label per graph
    <name>_node_labels.txt     optional categorical node label per node
    <name>_node_attributes.txt optional comma-separated floats per node
    <name>_edge_labels.txt     optional, ignored with a warning
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
import numpy as np

from .errors import (
    InconsistentNodeCountError,
    MissingFileError,
    NonContiguousGraphIdsError,
    TooFewSamplesError,
)
from .graphs import AttributeEncoding, Graph, build_graph, one_hot_encode


@dataclass
class DatasetBundle:
    name: str
    graphs: list
    graph_labels: np.ndarray  # contiguous 0-based class indices
    encoding: AttributeEncoding

    @property
    def n_classes(self) -> int:
        return int(self.graph_labels.max()) + 1 if len(self.graph_labels) else 0

    def subset(self, indices) -> "DatasetBundle":
        idx = np.asarray(indices, dtype=np.int64)
        return DatasetBundle(
            name=self.name,
            graphs=[self.graphs[i] for i in idx],
            graph_labels=self.graph_labels[idx],
            encoding=self.encoding,
        )


@dataclass(frozen=True)
class FoldSplit:
    fold_id: int
    train_indices: np.ndarray
    test_indices: np.ndarray


def _read_lines(path) -> list:
    if not os.path.exists(path):
        raise MissingFileError(path)
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def load_tu_dataset(directory, name: str) -> DatasetBundle:
    """Parse one dataset from `directory`. Node labels become a one-hot
    encoding over the dataset-wide sorted vocabulary; continuous attributes
    are used as-is (standardize separately on the training fold); with
    neither present, node degrees serve as labels."""
    prefix = os.path.join(directory, name, name)
    if not os.path.exists(prefix + "_A.txt"):
        prefix = os.path.join(directory, name)  # files directly in directory

    indicator = [int(x) for x in _read_lines(prefix + "_graph_indicator.txt")]
    n_nodes_total = len(indicator)
    n_graphs = max(indicator)
    if sorted(set(indicator)) != list(range(1, n_graphs + 1)):
        raise NonContiguousGraphIdsError(
            f"graph ids must cover 1..{n_graphs} with no gaps"
        )

    raw_graph_labels = [int(float(x)) for x in _read_lines(prefix + "_graph_labels.txt")]
    if len(raw_graph_labels) != n_graphs:
        raise InconsistentNodeCountError(
            f"{len(raw_graph_labels)} graph labels for {n_graphs} graphs"
        )

    # global node id -> (graph, local index), locals in order of appearance
    graph_of = np.array(indicator, dtype=np.int64) - 1
    local = np.zeros(n_nodes_total, dtype=np.int64)
    sizes = np.zeros(n_graphs, dtype=np.int64)
    for i, g in enumerate(graph_of):
        local[i] = sizes[g]
        sizes[g] += 1

    per_graph_edges = [set() for _ in range(n_graphs)]
    for line in _read_lines(prefix + "_A.txt"):
        a, b = (int(t) for t in line.replace(" ", "").split(","))
        u, v = a - 1, b - 1
        g = graph_of[u]
        if graph_of[v] != g:
            raise InconsistentNodeCountError(
                f"edge ({a}, {b}) crosses graph boundaries"
            )
        if u == v:
            continue
        key = (int(min(local[u], local[v])), int(max(local[u], local[v])))
        per_graph_edges[g].add(key)

    node_labels = None
    if os.path.exists(prefix + "_node_labels.txt"):
        node_labels = [int(float(x.split(",")[-1]))
                       for x in _read_lines(prefix + "_node_labels.txt")]
        if len(node_labels) != n_nodes_total:
            raise InconsistentNodeCountError(
                f"{len(node_labels)} node labels for {n_nodes_total} nodes"
            )
    node_attrs = None
    if os.path.exists(prefix + "_node_attributes.txt"):
        node_attrs = np.array([
            [float(t) for t in line.split(",")]
            for line in _read_lines(prefix + "_node_attributes.txt")
        ])
        if node_attrs.shape[0] != n_nodes_total:
            raise InconsistentNodeCountError(
                f"{node_attrs.shape[0]} attribute rows for {n_nodes_total} nodes"
            )
    if os.path.exists(prefix + "_edge_labels.txt"):
        warnings.warn(f"{name}: edge labels present but not supported; ignored")

    degree_mode = node_labels is None and node_attrs is None
    vocabulary = sorted(set(node_labels)) if node_labels is not None else None

    graphs = []
    node_rows_of = [np.nonzero(graph_of == g)[0] for g in range(n_graphs)]
    for g in range(n_graphs):
        rows = node_rows_of[g]
        n = len(rows)
        blocks = []
        if node_labels is not None:
            blocks.append(one_hot_encode([node_labels[i] for i in rows], vocabulary))
        if node_attrs is not None:
            blocks.append(node_attrs[rows])
        if degree_mode:
            deg = np.zeros(n, dtype=np.int64)
            for u_loc, v_loc in per_graph_edges[g]:
                deg[u_loc] += 1
                deg[v_loc] += 1
            blocks.append(deg[:, None].astype(np.float64))  # placeholder, re-encoded below
        attrs = np.hstack(blocks)
        graphs.append((n, sorted(per_graph_edges[g]), attrs))

    if degree_mode:
        all_degrees = np.concatenate([g[2][:, 0] for g in graphs]).astype(np.int64)
        degree_vocab = sorted(set(all_degrees.tolist()))
        encoding = AttributeEncoding(mode="one-hot", vocabulary=tuple(degree_vocab))
        built = [
            build_graph(n, edges, one_hot_encode(attrs[:, 0].astype(int).tolist(),
                                                 degree_vocab),
                        label_vocabulary=degree_vocab)
            for n, edges, attrs in graphs
        ]
    elif node_labels is not None and node_attrs is None:
        encoding = AttributeEncoding(mode="one-hot", vocabulary=tuple(vocabulary))
        built = [build_graph(n, edges, attrs, label_vocabulary=vocabulary)
                 for n, edges, attrs in graphs]
    else:
        # continuous, possibly with a one-hot prefix block when both exist
        encoding = AttributeEncoding(
            mode="continuous",
            vocabulary=tuple(vocabulary) if vocabulary is not None else None,
        )
        built = [build_graph(n, edges, attrs) for n, edges, attrs in graphs]

    label_map = {lab: i for i, lab in enumerate(sorted(set(raw_graph_labels)))}
    y = np.array([label_map[lab] for lab in raw_graph_labels], dtype=np.int64)
    return DatasetBundle(name=name, graphs=built, graph_labels=y, encoding=encoding)


def standardize_attributes(train: DatasetBundle):
    """Per-dimension zero mean, unit variance over all nodes of all training
    graphs; zero-variance dimensions are centered only (std recorded as 1).
    Returns the transformed bundle and the encoding carrying (mean, std)."""
    if train.encoding.mode != "continuous":
        raise ValueError("standardization applies to continuous attributes")
    stacked = np.vstack([g.attributes for g in train.graphs])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0] = 1.0
    encoding = AttributeEncoding(mode="continuous",
                                 vocabulary=train.encoding.vocabulary,
                                 mean=mean, std=std)
    graphs = [apply_standardization(g, encoding) for g in train.graphs]
    bundle = DatasetBundle(name=train.name, graphs=graphs,
                           graph_labels=train.graph_labels, encoding=encoding)
    return bundle, encoding


def apply_standardization(graph: Graph, encoding: AttributeEncoding) -> Graph:
    from dataclasses import replace

    attrs = (graph.attributes - encoding.mean) / encoding.std
    attrs.setflags(write=False)
    # structure is untouched, so keep the uid: cached path tables stay valid
    return replace(graph, attributes=attrs)


def stratified_kfold(labels, n_folds: int, seed: int) -> list:
    """Deterministic stratified folds: per class, shuffle then deal
    round-robin, rotating the starting fold so global sizes differ by at
    most one."""
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    if n_folds > n:
        raise TooFewSamplesError(f"{n_folds} folds for {n} samples")
    rng = np.random.default_rng(seed)
    fold_of = np.zeros(n, dtype=np.int64)
    start = 0
    for cls in np.unique(labels):
        members = np.nonzero(labels == cls)[0]
        if len(members) < n_folds:
            warnings.warn(
                f"class {cls} has {len(members)} members for {n_folds} folds"
            )
        members = members[rng.permutation(len(members))]
        for i, idx in enumerate(members):
            fold_of[idx] = (start + i) % n_folds
        start = (start + len(members)) % n_folds
    folds = []
    everything = np.arange(n)
    for f in range(n_folds):
        test = everything[fold_of == f]
        train = everything[fold_of != f]
        folds.append(FoldSplit(fold_id=f, train_indices=train, test_indices=test))
    return folds


def write_tu_dataset(bundle: DatasetBundle, directory, raw_node_labels=None):
    """Inverse of load_tu_dataset, for synthesizing benchmark directories.
    raw_node_labels optionally gives per-graph integer label lists; otherwise
    labels are derived from one-hot rows when the encoding is one-hot."""
    name = bundle.name
    root = os.path.join(directory, name)
    os.makedirs(root, exist_ok=True)
    prefix = os.path.join(root, name)
    offs = 0
    a_lines, ind_lines, lab_lines, attr_lines = [], [], [], []
    for gi, g in enumerate(bundle.graphs):
        for u, v in g.edges:
            a_lines.append(f"{offs + u + 1}, {offs + v + 1}")
            a_lines.append(f"{offs + v + 1}, {offs + u + 1}")
        ind_lines.extend([str(gi + 1)] * g.n_nodes)
        if bundle.encoding.mode == "one-hot":
            if raw_node_labels is not None:
                labs = raw_node_labels[gi]
            else:
                vocab = bundle.encoding.vocabulary
                labs = [vocab[int(np.argmax(row))] for row in g.attributes]
            lab_lines.extend(str(int(lab)) for lab in labs)
        else:
            attr_lines.extend(
                ", ".join(repr(float(x)) for x in row) for row in g.attributes
            )
        offs += g.n_nodes
    with open(prefix + "_A.txt", "w") as fh:
        fh.write("\n".join(a_lines) + "\n")
    with open(prefix + "_graph_indicator.txt", "w") as fh:
        fh.write("\n".join(ind_lines) + "\n")
    with open(prefix + "_graph_labels.txt", "w") as fh:
        fh.write("\n".join(str(int(y)) for y in bundle.graph_labels) + "\n")
    if lab_lines:
        with open(prefix + "_node_labels.txt", "w") as fh:
            fh.write("\n".join(lab_lines) + "\n")
    if attr_lines:
        with open(prefix + "_node_attributes.txt", "w") as fh:
            fh.write("\n".join(attr_lines) + "\n")
