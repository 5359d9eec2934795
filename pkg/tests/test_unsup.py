import numpy as np
import pytest

from gckn.errors import DegenerateSampleWarning, EmptyPopulationError
from gckn.model import embed_dataset, make_config, save_model
from gckn.unsup import fit_unsupervised, kmeans_filters, sample_paths
from oracles import random_labeled_graph


def small_dataset(seed=0, n=10):
    rng = np.random.default_rng(seed)
    return [random_labeled_graph(rng, int(rng.integers(4, 9)), 0.5, 3)
            for _ in range(n)]


def test_sample_paths_exhaustive_when_requesting_population():
    graphs = small_dataset(1, 4)
    feats = [g.attributes for g in graphs]
    full = sample_paths(graphs, feats, 1, 10 ** 9, seed=0)
    again = sample_paths(graphs, feats, 1, 10 ** 9, seed=123)
    # requesting more than the population returns exactly the population,
    # regardless of seed (as a multiset; order is canonical)
    assert full.shape == again.shape
    assert np.array_equal(np.sort(full, axis=0), np.sort(again, axis=0))


def test_sample_paths_deterministic():
    graphs = small_dataset(2, 5)
    feats = [g.attributes for g in graphs]
    a = sample_paths(graphs, feats, 2, 20, seed=7)
    b = sample_paths(graphs, feats, 2, 20, seed=7)
    assert np.array_equal(a, b)
    assert a.shape == (20, 3 * 3)


def test_sample_paths_empty_population():
    rng = np.random.default_rng(3)
    g = random_labeled_graph(rng, 3, 0.0, 2)  # no edges -> no length-1 paths
    with pytest.raises(EmptyPopulationError):
        sample_paths([g], [g.attributes], 1, 10, seed=0)


def test_kmeans_single_cluster_is_mean():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(50, 6))
    z = kmeans_filters(x, 1, seed=0, normalize="none")
    assert np.allclose(z[:, 0], x.mean(axis=0))
    zw = kmeans_filters(x, 1, seed=0, normalize="whole")
    m = x.mean(axis=0)
    assert np.allclose(zw[:, 0], m / np.linalg.norm(m))


def test_kmeans_exact_fit_when_q_equals_distinct():
    rng = np.random.default_rng(5)
    base = rng.normal(size=(4, 3))
    x = base[rng.integers(0, 4, size=200)]
    log = []
    z = kmeans_filters(x, 4, seed=1, normalize="none", inertia_log=log)
    got = z.T[np.lexsort(z.T.T)]
    want = base[np.lexsort(base.T)]
    assert np.allclose(got, want)
    assert log[-1] < 1e-20


def test_kmeans_inertia_never_increases():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(300, 5))
    log = []
    kmeans_filters(x, 7, seed=2, normalize="none", inertia_log=log)
    assert all(log[i + 1] <= log[i] + 1e-9 for i in range(len(log) - 1))


def test_kmeans_degenerate_sample_warns_and_pads():
    x = np.tile(np.array([1.0, 2.0, 3.0]), (20, 1))
    with pytest.warns(DegenerateSampleWarning):
        z = kmeans_filters(x, 3, seed=0, normalize="none")
    assert z.shape == (3, 3)
    assert np.all(np.isfinite(z))


def test_fit_unsupervised_standardizes_training_embeddings():
    graphs = small_dataset(7, 10)
    cfg = make_config("subtree", k1=2, q=6, sigma=0.6)
    model = fit_unsupervised(graphs, cfg, seed=11, n_sample_paths=5000)
    x = embed_dataset(graphs, model, fast_walk=False)
    assert np.all(np.abs(x.mean(axis=0)) < 1e-9)
    nontrivial = x.std(axis=0) > 1e-12
    assert np.all(np.abs(x.std(axis=0)[nontrivial] - 1.0) < 1e-9)


def test_fit_unsupervised_same_seed_same_model_file(tmp_path):
    graphs = small_dataset(8, 8)
    cfg = make_config("path", k1=2, q=5, sigma=0.5)
    m1 = fit_unsupervised(graphs, cfg, seed=42, n_sample_paths=2000)
    m2 = fit_unsupervised(graphs, cfg, seed=42, n_sample_paths=2000)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(m1, p1)
    save_model(m2, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_few_distinct_paths_make_nystrom_exact():
    # when the sample holds m < q distinct vectors, padded filters still
    # span them, so the projection reproduces the kernel on those paths
    from gckn.layers import LayerParams, inverse_sqrt_gram, kernel_matrix

    rng = np.random.default_rng(10)
    base = np.eye(4)[:3]  # 3 distinct one-hot path vectors
    samples = base[rng.integers(0, 3, size=100)]
    with pytest.warns(DegenerateSampleWarning):
        z = kmeans_filters(samples, 5, seed=0, normalize="none")
    p = LayerParams(k=0, q_in=4, q_out=5, filters=z, alpha=1.0, epsilon=1e-9)
    m = inverse_sqrt_gram(p)
    psi = kernel_matrix(base, z.T, 1.0, "gaussian-dot") @ m
    want = kernel_matrix(base, base, 1.0, "gaussian-dot")
    assert np.max(np.abs(psi @ psi.T - want)) < 1e-6


def test_fit_rejects_heterogeneous_dims():
    from gckn.errors import AttributeShapeMismatchError
    from gckn.graphs import build_graph

    g1 = build_graph(2, [(0, 1)], np.eye(2))
    g2 = build_graph(2, [(0, 1)], np.ones((2, 3)))
    cfg = make_config("path", k1=1, q=2, sigma=1.0)
    with pytest.raises(AttributeShapeMismatchError):
        fit_unsupervised([g1, g2], cfg, seed=0)


def test_fit_unsupervised_walk_architecture_smoke():
    graphs = small_dataset(9, 8)
    cfg = make_config("walk", k1=2, q=4, sigma=0.5)
    model = fit_unsupervised(graphs, cfg, seed=3, n_sample_paths=1000)
    x = embed_dataset(graphs, model)  # fast recursion path
    assert np.all(np.isfinite(x))
    assert x.shape == (len(graphs), 4)
