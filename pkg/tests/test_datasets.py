import os

import numpy as np
import pytest

from gckn.datasets import (
    DatasetBundle,
    apply_standardization,
    load_tu_dataset,
    standardize_attributes,
    stratified_kfold,
    write_tu_dataset,
)
from gckn.errors import MissingFileError, TooFewSamplesError
from gckn.graphs import build_graph, categorical_labels
from gckn.synth import random_graph


def synth_bundle(seed=0, n=12, continuous=False):
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(n):
        g = random_graph(rng, int(rng.integers(3, 7)), 0.6, 3)
        if continuous:
            attrs = rng.normal(size=(g.n_nodes, 4)) * 3 + 1
            g = build_graph(g.n_nodes, g.edges, attrs)
        graphs.append(g)
    labels = np.array([i % 2 for i in range(n)], dtype=np.int64)
    from gckn.graphs import AttributeEncoding

    enc = (AttributeEncoding(mode="continuous") if continuous
           else AttributeEncoding(mode="one-hot", vocabulary=(0, 1, 2)))
    return DatasetBundle(name="SYNTH", graphs=graphs, graph_labels=labels,
                         encoding=enc)


def test_tu_round_trip_one_hot(tmp_path):
    bundle = synth_bundle(1)
    write_tu_dataset(bundle, tmp_path)
    loaded = load_tu_dataset(tmp_path, "SYNTH")
    assert len(loaded.graphs) == len(bundle.graphs)
    assert np.array_equal(loaded.graph_labels, bundle.graph_labels)
    assert loaded.encoding.mode == "one-hot"
    for a, b in zip(loaded.graphs, bundle.graphs):
        assert a.n_nodes == b.n_nodes
        assert a.edges == b.edges
        assert np.array_equal(a.attributes, b.attributes)


def test_tu_round_trip_continuous(tmp_path):
    bundle = synth_bundle(2, continuous=True)
    write_tu_dataset(bundle, tmp_path)
    loaded = load_tu_dataset(tmp_path, "SYNTH")
    assert loaded.encoding.mode == "continuous"
    for a, b in zip(loaded.graphs, bundle.graphs):
        assert np.array_equal(a.attributes, b.attributes)  # repr round-trips


def test_tu_loading_is_deterministic(tmp_path):
    bundle = synth_bundle(3)
    write_tu_dataset(bundle, tmp_path)
    l1 = load_tu_dataset(tmp_path, "SYNTH")
    l2 = load_tu_dataset(tmp_path, "SYNTH")
    for a, b in zip(l1.graphs, l2.graphs):
        assert a.edges == b.edges
        assert np.array_equal(a.attributes, b.attributes)


def test_tu_degrees_when_no_labels(tmp_path):
    bundle = synth_bundle(4)
    write_tu_dataset(bundle, tmp_path)
    prefix = os.path.join(tmp_path, "SYNTH", "SYNTH")
    os.remove(prefix + "_node_labels.txt")
    loaded = load_tu_dataset(tmp_path, "SYNTH")
    g0 = loaded.graphs[0]
    vocab = loaded.encoding.vocabulary
    labels = categorical_labels(g0)
    assert [vocab[i] for i in labels] == [g0.degree(u) for u in range(g0.n_nodes)]


def test_tu_missing_file(tmp_path):
    bundle = synth_bundle(5)
    write_tu_dataset(bundle, tmp_path)
    os.remove(os.path.join(tmp_path, "SYNTH", "SYNTH_A.txt"))
    with pytest.raises(MissingFileError):
        load_tu_dataset(tmp_path, "SYNTH")


def test_standardization_moments_and_inversion():
    bundle = synth_bundle(6, continuous=True)
    std_bundle, enc = standardize_attributes(bundle)
    stacked = np.vstack([g.attributes for g in std_bundle.graphs])
    assert np.all(np.abs(stacked.mean(axis=0)) < 1e-9)
    assert np.allclose(stacked.std(axis=0), 1.0)
    # inversion recovers the original values
    for orig, now in zip(bundle.graphs, std_bundle.graphs):
        back = now.attributes * enc.std + enc.mean
        assert np.allclose(back, orig.attributes, atol=1e-12)


def test_standardization_two_point_and_constant_dimension():
    g = build_graph(2, [(0, 1)], np.array([[1.0, 5.0], [3.0, 5.0]]))
    from gckn.graphs import AttributeEncoding

    bundle = DatasetBundle("T", [g], np.array([0]),
                           AttributeEncoding(mode="continuous"))
    std_bundle, enc = standardize_attributes(bundle)
    col = std_bundle.graphs[0].attributes[:, 0]
    assert np.allclose(sorted(col), [-1.0, 1.0])
    assert np.allclose(std_bundle.graphs[0].attributes[:, 1], 0.0)
    assert enc.std[1] == 1.0


def test_standardization_applies_to_held_out():
    bundle = synth_bundle(7, continuous=True)
    _, enc = standardize_attributes(bundle)
    rng = np.random.default_rng(0)
    g = build_graph(3, [(0, 1)], rng.normal(size=(3, 4)))
    h = apply_standardization(g, enc)
    assert np.allclose(h.attributes, (g.attributes - enc.mean) / enc.std)


def test_stratified_kfold_perfect_balance():
    labels = [0, 1] * 5
    folds = stratified_kfold(labels, 5, seed=0)
    for f in folds:
        y = np.asarray(labels)[f.test_indices]
        assert sorted(y.tolist()) == [0, 1]


def test_stratified_kfold_188_sizes():
    rng = np.random.default_rng(1)
    labels = rng.integers(0, 2, size=188)
    folds = stratified_kfold(labels, 10, seed=3)
    sizes = sorted(len(f.test_indices) for f in folds)
    assert set(sizes) <= {18, 19}
    assert sum(sizes) == 188


def test_stratified_kfold_partition_and_determinism():
    rng = np.random.default_rng(2)
    labels = rng.integers(0, 3, size=50)
    a = stratified_kfold(labels, 7, seed=9)
    b = stratified_kfold(labels, 7, seed=9)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.test_indices, fb.test_indices)
    covered = np.concatenate([f.test_indices for f in a])
    assert sorted(covered.tolist()) == list(range(50))
    for f in a:
        assert not set(f.test_indices) & set(f.train_indices)


def test_stratified_kfold_too_few():
    with pytest.raises(TooFewSamplesError):
        stratified_kfold([0, 1, 0], 5, seed=0)


def test_stratified_kfold_warns_on_tiny_class():
    labels = [0] * 20 + [1]
    with pytest.warns(UserWarning):
        stratified_kfold(labels, 5, seed=0)


DATA_DIR = os.environ.get("GCKN_DATA_DIR", "data")


def _has(name):
    return (os.path.exists(os.path.join(DATA_DIR, name, f"{name}_A.txt"))
            or os.path.exists(os.path.join(DATA_DIR, f"{name}_A.txt")))


@pytest.mark.skipif(not _has("MUTAG"), reason="MUTAG benchmark not present")
def test_mutag_shape():
    bundle = load_tu_dataset(DATA_DIR, "MUTAG")
    assert len(bundle.graphs) == 188
    assert bundle.n_classes == 2
    assert bundle.encoding.mode == "one-hot"


@pytest.mark.skipif(not _has("ENZYMES"), reason="ENZYMES benchmark not present")
def test_enzymes_shape_and_standardization():
    bundle = load_tu_dataset(DATA_DIR, "ENZYMES")
    assert len(bundle.graphs) == 600
    assert bundle.n_classes == 6
    # 18 continuous dimensions, preceded by a one-hot block when the
    # categorical labels file is also present
    prefix = (len(bundle.encoding.vocabulary)
              if bundle.encoding.vocabulary is not None else 0)
    assert bundle.graphs[0].attr_dim == prefix + 18
    std_bundle, _ = standardize_attributes(bundle)
    stacked = np.vstack([g.attributes for g in std_bundle.graphs])
    assert np.all(np.abs(stacked.mean(axis=0)) < 1e-9)
