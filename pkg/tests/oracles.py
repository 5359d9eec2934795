"""Independent reference implementations used to cross-check the library.

Everything here is written directly from first principles (exhaustive
enumeration, naive double loops) and deliberately shares no code with the
package internals it verifies.
"""

import itertools
from collections import Counter

import numpy as np

from gckn.graphs import build_graph, categorical_labels, one_hot_encode


def brute_force_traversals(graph, k, distinct):
    """All length-k traversals from each node, by filtering the full cartesian
    product of vertex sequences."""
    n = graph.n_nodes
    edge_set = {(u, v) for u, v in graph.edges} | {(v, u) for u, v in graph.edges}
    per_node = {u: [] for u in range(n)}
    for seq in itertools.product(range(n), repeat=k + 1):
        if distinct and len(set(seq)) != k + 1:
            continue
        if all((seq[i], seq[i + 1]) in edge_set for i in range(k)):
            per_node[seq[0]].append(list(seq))
    for u in per_node:
        per_node[u].sort()
    return per_node


def label_tuple(graph, seq):
    labels = categorical_labels(graph)
    return tuple(int(labels[v]) for v in seq)


def brute_force_walk_kernel(g1, g2, k):
    """Count matching attribute sequences over all walk pairs, by explicit
    double loop."""
    w1 = [seq for seqs in brute_force_traversals(g1, k, distinct=False).values()
          for seq in seqs]
    w2 = [seq for seqs in brute_force_traversals(g2, k, distinct=False).values()
          for seq in seqs]
    t1 = [label_tuple(g1, s) for s in w1]
    t2 = [label_tuple(g2, s) for s in w2]
    return float(sum(1 for a in t1 for b in t2 if a == b))


def brute_force_path_kernel(g1, g2, k):
    p1 = [seq for seqs in brute_force_traversals(g1, k, distinct=True).values()
          for seq in seqs]
    p2 = [seq for seqs in brute_force_traversals(g2, k, distinct=True).values()
          for seq in seqs]
    t1 = [label_tuple(g1, s) for s in p1]
    t2 = [label_tuple(g2, s) for s in p2]
    return float(sum(1 for a in t1 for b in t2 if a == b))


def naive_wl_kernel(g1, g2, k):
    """Iterative-relabeling subtree kernel written straight from its
    definition: string signatures, joint relabeling, per-round histogram
    dot products summed over rounds 0..k."""
    labs = [
        [str(int(x)) for x in categorical_labels(g)]
        for g in (g1, g2)
    ]
    total = 0.0
    graphs = (g1, g2)
    for rounds in range(k + 1):
        if rounds > 0:
            sigs = []
            for gi, g in enumerate(graphs):
                sigs.append([
                    labs[gi][u] + "|" + ",".join(sorted(labs[gi][v] for v in g.adjacency[u]))
                    for u in range(g.n_nodes)
                ])
            table = {}
            for gi in range(2):
                for s in sigs[gi]:
                    if s not in table:
                        table[s] = str(len(table))
            labs = [[table[s] for s in sigs[gi]] for gi in range(2)]
        h1, h2 = Counter(labs[0]), Counter(labs[1])
        total += sum(c * h2[lab] for lab, c in h1.items())
    return float(total)


def brute_force_k2(g1, g2, k):
    """Node pairs with equal multisets of outgoing path label sequences."""
    per1 = brute_force_traversals(g1, k, distinct=True)
    per2 = brute_force_traversals(g2, k, distinct=True)
    count = 0
    for u in range(g1.n_nodes):
        m1 = Counter(label_tuple(g1, s) for s in per1[u])
        for v in range(g2.n_nodes):
            m2 = Counter(label_tuple(g2, s) for s in per2[v])
            if m1 == m2:
                count += 1
    return float(count)


def random_labeled_graph(rng, n_nodes, edge_prob, n_labels):
    """Erdos-Renyi style graph with one-hot labels from a fixed vocabulary."""
    edges = [
        (u, v)
        for u in range(n_nodes)
        for v in range(u + 1, n_nodes)
        if rng.random() < edge_prob
    ]
    raw = rng.integers(0, n_labels, size=n_nodes).tolist()
    attrs = one_hot_encode(raw, list(range(n_labels)))
    return build_graph(n_nodes, edges, attrs, label_vocabulary=range(n_labels))


def numeric_model_filter_grads(batch, model, clf, step=1e-4):
    """Central finite differences of the batch objective through the whole
    model, one filter coordinate at a time."""
    from gckn.model import GcknModel, embed_dataset
    from gckn.sup import batch_objective

    grads = []
    for j, params in enumerate(model.layers):
        g = np.zeros_like(params.filters)
        for idx in np.ndindex(*params.filters.shape):
            for sign in (+1, -1):
                z = params.filters.copy()
                z[idx] += sign * step
                layers = list(model.layers)
                layers[j] = params.with_filters(z)
                m2 = GcknModel(layers=layers, output_spec=model.output_spec,
                               embed_stats=model.embed_stats)
                x = np.vstack([
                    embed_dataset([gr], m2, fast_walk=False)[0]
                    for gr, _ in batch
                ])
                val = batch_objective(x, [y for _, y in batch], clf)
                g[idx] += sign * val / (2 * step)
        grads.append(g)
    return grads


def distinct_neighbor_labeling(rng, n_nodes, edges, n_labels):
    """Greedy labels such that every node's neighbors are pairwise distinct:
    color each node avoiding the labels of all nodes it shares a neighbor
    with (distance-2 constraint)."""
    adj = [set() for _ in range(n_nodes)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    labels = [-1] * n_nodes
    order = list(range(n_nodes))
    rng.shuffle(order)
    for u in order:
        forbidden = set()
        for v in adj[u]:
            for w in adj[v]:
                if w != u and labels[w] >= 0:
                    forbidden.add(labels[w])
        choices = [c for c in range(n_labels) if c not in forbidden]
        if not choices:
            choices = list(range(n_labels))  # vocab too small; caller sizes it
        labels[u] = int(rng.choice(choices))
    return labels
