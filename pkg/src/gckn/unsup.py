"""Layerwise unsupervised filter learning.

Filters for each layer come from K-means over path attribute vectors sampled
from the training graphs; the layer is then frozen and its outputs feed the
sampling of the next layer. Finally, per-dimension statistics of the training
embeddings are recorded so embeddings can be mean-centered and standardized.
"""

from __future__ import annotations

import warnings
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AttributeShapeMismatchError,
    DegenerateSampleWarning,
    EmptyPopulationError,
)
from .graphs import AttributeEncoding, Graph
from .layers import LayerParams, inverse_sqrt_gram_full, layer_apply, normalize_filters
from .model import GcknModel, ModelConfig, assemble_embedding
from .paths import PathCache, shared_cache

DEFAULT_SAMPLE_SIZE = 300_000


def sample_paths(graphs: Sequence[Graph], feature_maps: Sequence[np.ndarray],
                 k: int, n_samples: int, seed: int, mode: str = "path",
                 cache: Optional[PathCache] = None,
                 normalize: str = "none") -> np.ndarray:
    """Uniform sample (without replacement, capped at the population size)
    over all (graph, node, path) triples; rows are path attribute vectors."""
    cache = cache or shared_cache
    tables = [cache.get(g, k, mode) for g in graphs]
    counts = np.array([t.n_total for t in tables], dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        raise EmptyPopulationError(f"no length-{k} {mode}s in the training fold")
    rng = np.random.default_rng(seed)
    m = min(n_samples, total)
    chosen = np.sort(rng.choice(total, size=m, replace=False))

    starts = np.concatenate([[0], np.cumsum(counts)])
    rows = []
    for gi, (table, feats) in enumerate(zip(tables, feature_maps)):
        lo, hi = starts[gi], starts[gi + 1]
        local = chosen[(chosen >= lo) & (chosen < hi)] - lo
        if local.size:
            rows.append(feats[table.flat[local]].reshape(local.size, -1))
    out = np.vstack(rows)
    if normalize == "whole":
        norms = np.linalg.norm(out, axis=1)
        keep = norms > 0
        if keep.any():
            out = out[keep] / norms[keep][:, None]
        else:
            warnings.warn("all sampled path vectors are zero",
                          DegenerateSampleWarning)
    elif normalize == "blocks":
        pass  # one-hot inputs already have unit blocks; kept verbatim
    return out


def _kmeanspp_init(x: np.ndarray, q: int, rng) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((q, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for i in range(1, q):
        total = d2.sum()
        if total <= 0:
            centers[i] = x[rng.integers(n)]
            continue
        probs = d2 / total
        centers[i] = x[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((x - centers[i]) ** 2, axis=1))
    return centers


def _assign(x: np.ndarray, centers: np.ndarray, chunk: int = 16384):
    """Nearest center per row, chunked to bound the distance matrix size."""
    labels = np.empty(x.shape[0], dtype=np.int64)
    inertia = 0.0
    c2 = np.sum(centers * centers, axis=1)
    for lo in range(0, x.shape[0], chunk):
        xc = x[lo:lo + chunk]
        d2 = c2[None, :] - 2.0 * (xc @ centers.T)
        idx = np.argmin(d2, axis=1)
        labels[lo:lo + chunk] = idx
        picked = d2[np.arange(xc.shape[0]), idx] + np.sum(xc * xc, axis=1)
        inertia += float(np.maximum(picked, 0.0).sum())
    return labels, inertia


def kmeans_filters(samples: np.ndarray, q: int, seed: int,
                   normalize: str = "none", k: int = 0,
                   max_iter: int = 100, tol: float = 1e-4,
                   inertia_log: Optional[list] = None) -> np.ndarray:
    """K-means++ then Lloyd until the relative inertia improvement drops
    below tol (or max_iter). Returns a (width, q) filter matrix with columns
    rescaled per `normalize` ("whole", "blocks" with path length k, "none");
    deterministic given seed. inertia_log, if given, collects the inertia
    after each assignment step."""
    x = np.asarray(samples, dtype=np.float64)
    rng = np.random.default_rng(seed)
    distinct = np.unique(x, axis=0)
    if distinct.shape[0] == 1 and q > 1:
        warnings.warn("all sampled rows identical; padding with perturbed copies",
                      DegenerateSampleWarning)
        centers = np.tile(distinct[0], (q, 1))
        centers[1:] += rng.normal(scale=1e-4, size=(q - 1, x.shape[1]))
        return normalize_filters(centers.T, k, normalize)
    q_eff = min(q, distinct.shape[0])

    centers = _kmeanspp_init(x, q_eff, rng)
    prev = np.inf
    for _ in range(max_iter):
        labels, inertia = _assign(x, centers)
        if inertia_log is not None:
            inertia_log.append(inertia)
        if prev < np.inf and prev > 0 and (prev - inertia) / prev < tol:
            prev = inertia
            break
        prev = inertia
        for c in range(q_eff):
            members = labels == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                # reseed empty clusters to the point farthest from its center
                d2 = np.sum((x - centers[labels]) ** 2, axis=1)
                centers[c] = x[int(np.argmax(d2))]

    if q_eff < q:
        warnings.warn(
            f"only {q_eff} distinct rows for {q} filters; padding with "
            "perturbed copies", DegenerateSampleWarning)
        extra = centers[rng.integers(0, q_eff, size=q - q_eff)]
        extra = extra + rng.normal(scale=1e-4, size=extra.shape)
        centers = np.vstack([centers, extra])
    return normalize_filters(centers.T, k, normalize)


def _layer_conventions(cfg, input_features: Sequence[np.ndarray]):
    """Filter/sample normalization for a layer: direction clustering for the
    homogeneous flavor, per-block unit norms for gaussian one-hot inputs."""
    if cfg.kernel_flavor == "homogeneous-dot":
        return "whole"
    for feats in input_features:
        if feats.shape[0]:
            norms = np.linalg.norm(feats, axis=1)
            if not np.allclose(norms, 1.0, atol=1e-9):
                return "none"
    return "blocks"


def fit_unsupervised(graphs: Sequence[Graph], config: ModelConfig, seed: int,
                     n_sample_paths: int = DEFAULT_SAMPLE_SIZE,
                     cache: Optional[PathCache] = None,
                     encoding: Optional[AttributeEncoding] = None) -> GcknModel:
    """Learn all layer filters bottom-up on `graphs`, then record embedding
    mean/std over the same graphs (zero-variance dimensions keep std 1)."""
    cache = cache or shared_cache
    rng = np.random.default_rng(seed)
    q_in = graphs[0].attributes.shape[1]
    for g in graphs:
        if g.attributes.shape[1] != q_in:
            raise AttributeShapeMismatchError(
                "all graphs in a dataset must share one attribute dimension"
            )
    features = [g.attributes for g in graphs]
    per_layer_outputs = []
    layers = []
    for cfg in config.layers:
        convention = _layer_conventions(cfg, features)
        samples = sample_paths(graphs, features, cfg.k,
                               n_sample_paths, int(rng.integers(2 ** 63)),
                               mode=cfg.mode, cache=cache, normalize=convention)
        filters = kmeans_filters(samples, cfg.q_out, int(rng.integers(2 ** 63)),
                                 normalize=convention, k=cfg.k)
        params = LayerParams(k=cfg.k, q_in=q_in, q_out=cfg.q_out, filters=filters,
                             alpha=cfg.alpha, kernel_flavor=cfg.kernel_flavor,
                             pooling=cfg.pooling, epsilon=cfg.epsilon, mode=cfg.mode)
        layers.append(params)
        inv_sqrt = inverse_sqrt_gram_full(params)[0]
        features = [
            layer_apply(feats, cache.get(g, cfg.k, cfg.mode), params,
                        inv_sqrt=inv_sqrt)[0]
            for g, feats in zip(graphs, features)
        ]
        per_layer_outputs.append(features)
        q_in = cfg.q_out

    model = GcknModel(layers=layers, output_spec=config.output, encoding=encoding)
    embs = np.vstack([
        assemble_embedding(model, [outs[i] for outs in per_layer_outputs],
                           graphs[i].n_nodes).vector
        for i in range(len(graphs))
    ])
    mean = embs.mean(axis=0)
    std = embs.std(axis=0)
    std[std == 0] = 1.0
    model.embed_stats = (mean, std)
    return model
