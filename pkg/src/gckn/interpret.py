"""Post-hoc interpretation: find a sparse set of paths that preserves the
model's prediction, then merge them into a motif subgraph.

A mask in [0,1] per path (per layer) scales that path's attribute vector
before projection; the mask is optimized to keep the predicted class's score
high while an L1 penalty prunes paths. Selected paths (mask above threshold)
are merged and the largest connected component is reported with per-edge
contribution scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .autograd import model_tape_backward, model_tape_forward
from .errors import EmptySelectionError, ShapeMismatchError
from .graphs import Graph
from .model import GcknModel, GraphEmbedding
from .paths import PathCache, shared_cache
from .svm import LinearClassifier, decision_scores, predict


@dataclass
class PathMask:
    """Per-layer relaxation weights, indexed like the layer's path table.
    layer_keys records each layer's (k, mode) so the mask can be mapped back
    to node sequences without the model at hand."""

    per_layer: list
    layer_keys: tuple

    def clamp(self):
        for m in self.per_layer:
            np.clip(m, 0.0, 1.0, out=m)

    def total_entries(self) -> int:
        return int(sum(m.size for m in self.per_layer))

    def l1(self) -> float:
        return float(sum(np.abs(m).sum() for m in self.per_layer))


def full_mask(graph: Graph, model: GcknModel,
              cache: Optional[PathCache] = None) -> PathMask:
    cache = cache or shared_cache
    per_layer = []
    keys = []
    for p in model.layers:
        table = cache.get(graph, p.k, p.mode)
        per_layer.append(np.ones(table.n_total))
        keys.append((p.k, p.mode))
    return PathMask(per_layer=per_layer, layer_keys=tuple(keys))


def masked_forward(graph: Graph, model: GcknModel, clf: LinearClassifier,
                   mask: PathMask, cache: Optional[PathCache] = None):
    """(embedding, head scores) with every path contribution scaled by its
    mask entry. An all-ones mask reproduces the unmasked forward exactly."""
    if len(mask.per_layer) != len(model.layers):
        raise ShapeMismatchError(
            f"mask has {len(mask.per_layer)} layers, model has {len(model.layers)}"
        )
    tape = model_tape_forward(graph, model, cache=cache, masks=mask.per_layer)
    emb = GraphEmbedding(vector=tape.vector, segments=tape.segments)
    scores = decision_scores(clf, tape.vector[None, :])[0]
    return emb, scores


def optimize_mask(graph: Graph, model: GcknModel, clf: LinearClassifier,
                  mu: float = 0.01, steps: int = 250, seed: int = 0,
                  cache: Optional[PathCache] = None,
                  history: Optional[list] = None) -> PathMask:
    """Minimize squared-hinge loss of the model's own predicted class plus
    mu * sum of mask entries, over the box [0,1]^paths (projected
    quasi-Newton). Deterministic; starts from the all-ones mask."""
    cache = cache or shared_cache
    base = full_mask(graph, model, cache=cache)
    sizes = [m.size for m in base.per_layer]
    splits = np.cumsum(sizes)[:-1]

    tape0 = model_tape_forward(graph, model, cache=cache, masks=base.per_layer)
    yhat = int(predict(clf, tape0.vector[None, :])[0])
    if clf.n_heads == 1:
        head, sign = 0, (1.0 if yhat == 1 else -1.0)
    else:
        head, sign = yhat, 1.0
    w_head = clf.weights[head]
    b_head = clf.intercepts[head]

    def objective(flat):
        masks = np.split(flat, splits)
        tape = model_tape_forward(graph, model, cache=cache, masks=masks)
        s = sign * (w_head @ tape.vector + b_head)
        slack = max(0.0, 1.0 - s)
        value = slack * slack + mu * float(flat.sum())
        dvec = (-2.0 * slack * sign) * w_head
        _, mask_grads = model_tape_backward(tape, dvec)
        grad = np.concatenate([g for g in mask_grads]) + mu
        return value, grad

    calls = []
    if history is not None:
        def record(xk):
            history.append(objective(xk)[0])
    else:
        record = None

    res = minimize(objective, np.ones(int(sum(sizes))), jac=True,
                   method="L-BFGS-B", bounds=[(0.0, 1.0)] * int(sum(sizes)),
                   callback=record,
                   options={"maxiter": steps, "ftol": 1e-12, "gtol": 1e-10})
    out = np.clip(res.x, 0.0, 1.0)
    return PathMask(per_layer=list(np.split(out, splits)),
                    layer_keys=base.layer_keys)


# ---------------------------------------------------------------------------
# motif extraction

@dataclass
class Motif:
    """Connected subgraph assembled from selected paths: original node ids,
    undirected edges (u < v) and their accumulated mask scores."""

    nodes: tuple
    edges: tuple
    edge_scores: tuple

    def score_of(self, u: int, v: int) -> float:
        key = (min(u, v), max(u, v))
        return dict(zip(self.edges, self.edge_scores)).get(key, 0.0)


def _components(nodes, edges):
    parent = {u: u for u in nodes}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for u, v in edges:
        parent[find(u)] = find(v)
    comps = {}
    for u in nodes:
        comps.setdefault(find(u), set()).add(u)
    return list(comps.values())


def extract_motif(graph: Graph, mask: PathMask, threshold: float = 0.5,
                  cache: Optional[PathCache] = None) -> Motif:
    """Merge paths whose mask entry exceeds threshold and return the largest
    connected component (ties broken by total edge score)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    cache = cache or shared_cache
    edge_scores = {}
    node_scores = {}
    any_selected = False
    for (k, mode), values in zip(mask.layer_keys, mask.per_layer):
        table = cache.get(graph, k, mode)
        selected = np.nonzero(values > threshold)[0]
        for idx in selected:
            any_selected = True
            row = table.flat[idx]
            weight = float(values[idx])
            for node in row:
                node_scores[int(node)] = node_scores.get(int(node), 0.0) + weight
            for a, b in zip(row[:-1], row[1:]):
                key = (int(min(a, b)), int(max(a, b)))
                edge_scores[key] = edge_scores.get(key, 0.0) + weight
    if not any_selected:
        raise EmptySelectionError(f"no mask entry above {threshold}")

    if not edge_scores:
        # only single-vertex paths selected: report the strongest node
        best = max(sorted(node_scores), key=lambda u: node_scores[u])
        return Motif(nodes=(best,), edges=(), edge_scores=())

    nodes = sorted({u for e in edge_scores for u in e})
    comps = _components(nodes, list(edge_scores))

    def comp_rank(c):
        total = sum(s for e, s in edge_scores.items() if e[0] in c and e[1] in c)
        return (len(c), total)

    best = max(comps, key=comp_rank)
    kept = sorted(e for e in edge_scores if e[0] in best and e[1] in best)
    return Motif(nodes=tuple(sorted(best)), edges=tuple(kept),
                 edge_scores=tuple(edge_scores[e] for e in kept))


def motif_edge_list_text(motif: Motif) -> str:
    lines = ["# u v score"]
    for (u, v), s in zip(motif.edges, motif.edge_scores):
        lines.append(f"{u} {v} {s:.6f}")
    if not motif.edges:
        lines.extend(f"{u}" for u in motif.nodes)
    return "\n".join(lines) + "\n"


def motif_dot(motif: Motif, graph: Optional[Graph] = None) -> str:
    """DOT export; node labels show the raw categorical label when known."""
    out = ["graph motif {"]
    for u in motif.nodes:
        label = str(u)
        if graph is not None and graph.label_vocabulary is not None:
            idx = int(np.argmax(graph.attributes[u]))
            label = f"{u}:{graph.label_vocabulary[idx]}"
        out.append(f'  n{u} [label="{label}"];')
    for (u, v), s in zip(motif.edges, motif.edge_scores):
        out.append(f'  n{u} -- n{v} [label="{s:.3f}"];')
    out.append("}")
    return "\n".join(out) + "\n"
