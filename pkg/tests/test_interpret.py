import numpy as np
import pytest

from gckn.errors import EmptySelectionError
from gckn.interpret import (
    PathMask,
    extract_motif,
    full_mask,
    masked_forward,
    motif_dot,
    motif_edge_list_text,
    optimize_mask,
)
from gckn.layers import LayerParams
from gckn.model import GcknModel, OutputSpec, embed_dataset, make_config, model_forward
from gckn.paths import enumerate_paths, shared_cache
from gckn.svm import predict, train_squared_hinge
from gckn.synth import planted_motif_dataset, random_graph
from gckn.unsup import fit_unsupervised


def trained_motif_setup(n=120, seed=5):
    graphs, labels, motifs = planted_motif_dataset(n, seed=seed)
    split = n // 2
    train_g, train_y = graphs[:split], labels[:split]
    cfg = make_config("path", k1=3, q=16, sigma=0.6)
    model = fit_unsupervised(train_g, cfg, seed=0, n_sample_paths=20000)
    x = embed_dataset(train_g, model, fast_walk=False)
    clf = train_squared_hinge(x, train_y, lam=0.01)
    return model, clf, graphs[split:], labels[split:], motifs[split:]


def small_model(seed=0, flavor="gaussian-dot", with_stats=False):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 7, 0.5, 3)
    z = rng.normal(size=(6, 4))
    z /= np.linalg.norm(z, axis=0)
    lp = LayerParams(k=1, q_in=3, q_out=4, filters=z, alpha=1.0,
                     kernel_flavor=flavor)
    stats = None
    if with_stats:
        stats = (rng.normal(size=4), np.abs(rng.normal(size=4)) + 0.5)
    model = GcknModel(layers=[lp], output_spec=OutputSpec((1,), "sum"),
                      embed_stats=stats)
    clf = train_squared_hinge(rng.normal(size=(6, 4)),
                              [0, 1, 0, 1, 0, 1], lam=0.1)
    return g, model, clf


def test_all_ones_mask_bit_identical():
    g, model, clf = small_model(with_stats=True)
    emb, _ = masked_forward(g, model, clf, full_mask(g, model))
    ref = model_forward(g, model)
    assert np.array_equal(emb.vector, ref.vector)  # 0 ulps


def test_all_zeros_mask_homogeneous_gives_zero_embedding():
    g, model, clf = small_model(flavor="homogeneous-dot")
    mask = full_mask(g, model)
    mask.per_layer = [np.zeros_like(m) for m in mask.per_layer]
    emb, _ = masked_forward(g, model, clf, mask)
    assert np.array_equal(emb.vector, np.zeros_like(emb.vector))


def test_mask_respecting_motif_preserves_prediction():
    model, clf, test_g, test_y, test_m = trained_motif_setup()
    checked = 0
    for g, y, motif_edges in zip(test_g, test_y, test_m):
        if y != 1 or checked >= 5:
            continue
        motif_nodes = {u for e in motif_edges for u in e}
        table = shared_cache.get(g, 3, "path")
        keep = np.array([
            1.0 if set(map(int, row)) & motif_nodes else 0.0
            for row in table.flat
        ])
        mask = PathMask(per_layer=[keep], layer_keys=((3, "path"),))
        _, scores = masked_forward(g, model, clf, mask)
        full_emb = embed_dataset([g], model, fast_walk=False)
        assert predict(clf, full_emb)[0] == 1
        assert (scores[0] > 0) == True
        checked += 1
    assert checked == 5


def test_optimize_mask_mu_zero_no_worse_than_all_ones():
    g, model, clf = small_model(seed=3)
    hist = []
    mask = optimize_mask(g, model, clf, mu=0.0, steps=100, history=hist)
    emb1, s1 = masked_forward(g, model, clf, full_mask(g, model))
    emb2, s2 = masked_forward(g, model, clf, mask)
    yhat = int(predict(clf, emb1.vector[None, :])[0])
    sign = 1.0 if yhat == 1 else -1.0

    def loss(scores):
        return max(0.0, 1.0 - sign * scores[0]) ** 2

    assert loss(s2) <= loss(s1) + 1e-8


def test_optimize_mask_huge_mu_drives_mask_to_zero():
    g, model, clf = small_model(seed=4)
    mask = optimize_mask(g, model, clf, mu=1e3, steps=200)
    assert mask.l1() < 1e-3


def test_optimizer_objective_non_increasing():
    model, clf, test_g, test_y, _ = trained_motif_setup(n=40)
    g = test_g[1]
    hist = []
    optimize_mask(g, model, clf, mu=0.01, steps=150, history=hist)
    assert len(hist) >= 2
    assert all(hist[i + 1] <= hist[i] + 1e-10 for i in range(len(hist) - 1))


def test_extract_single_path():
    rng = np.random.default_rng(7)
    g = random_graph(rng, 6, 0.6, 2)
    table = shared_cache.get(g, 2, "path")
    vals = np.zeros(table.n_total)
    vals[0] = 0.9
    row = table.flat[0]
    motif = extract_motif(g, PathMask([vals], ((2, "path"),)), 0.5)
    assert set(motif.nodes) == set(int(x) for x in row)
    assert len(motif.edges) == 2


def test_extract_prefers_larger_component():
    g = __import__("gckn.graphs", fromlist=["build_graph"]).build_graph(
        7, [(0, 1), (2, 3), (3, 4)], np.eye(7))
    p1 = enumerate_paths(g, 1)
    vals = np.zeros(p1.n_total)
    # select edge (0,1) once and the 2-edge component via (2,3), (3,4)
    for i, row in enumerate(p1.flat):
        if row.tolist() in ([0, 1], [2, 3], [3, 4]):
            vals[i] = 0.8
    motif = extract_motif(g, PathMask([vals], ((1, "path"),)), 0.5)
    assert set(motif.nodes) == {2, 3, 4}


def test_extract_empty_selection():
    rng = np.random.default_rng(8)
    g = random_graph(rng, 5, 0.5, 2)
    table = shared_cache.get(g, 1, "path")
    with pytest.raises(EmptySelectionError):
        extract_motif(g, PathMask([np.zeros(table.n_total)], ((1, "path"),)), 0.5)


def test_motif_is_connected_subgraph_of_input():
    model, clf, test_g, test_y, _ = trained_motif_setup(n=40)
    g = test_g[3]
    mask = optimize_mask(g, model, clf, mu=0.01, steps=200)
    motif = extract_motif(g, mask, 0.5)
    real_edges = set(g.edges)
    assert all(e in real_edges for e in motif.edges)
    # connectivity: every node reachable from the first one
    adj = {u: set() for u in motif.nodes}
    for u, v in motif.edges:
        adj[u].add(v)
        adj[v].add(u)
    seen = {motif.nodes[0]}
    frontier = [motif.nodes[0]]
    while frontier:
        u = frontier.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                frontier.append(v)
    assert seen == set(motif.nodes)


def test_planted_motif_recovery_rate():
    model, clf, test_g, test_y, test_m = trained_motif_setup()
    positives = [(g, m) for g, y, m in zip(test_g, test_y, test_m) if y == 1][:15]
    hits = 0
    for g, motif_edges in positives:
        mask = optimize_mask(g, model, clf, mu=0.01, steps=250)
        try:
            motif = extract_motif(g, mask, 0.5)
        except EmptySelectionError:
            continue
        if set(motif.edges) & motif_edges:
            hits += 1
    assert hits >= 0.8 * len(positives)


def test_exports():
    rng = np.random.default_rng(9)
    g = random_graph(rng, 5, 0.7, 2)
    table = shared_cache.get(g, 1, "path")
    vals = np.zeros(table.n_total)
    vals[:2] = 0.9
    motif = extract_motif(g, PathMask([vals], ((1, "path"),)), 0.5)
    text = motif_edge_list_text(motif)
    assert text.startswith("# u v score")
    dot = motif_dot(motif, g)
    assert dot.startswith("graph motif {") and dot.rstrip().endswith("}")
