"""Multilayer models: stack projection layers, pool node features into a
graph embedding, serialize/deserialize.

A model is an ordered list of layers; the output spec says which layers'
node features are globally pooled and concatenated into the embedding.
Optional per-dimension (mean, std) statistics, recorded at fit time, center
and standardize the final vector.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CorruptModelError,
    DimensionMismatchError,
    SchemaVersionMismatchError,
    SegmentMismatchError,
)
from .graphs import AttributeEncoding, Graph
from .layers import (
    LayerParams,
    NodeFeatureMap,
    inverse_sqrt_gram_full,
    layer_apply,
    walk_layer_forward_fast,
)
from .paths import PathCache, shared_cache

MODEL_FORMAT = "gckn-model"
MODEL_VERSION = 1

ARCHITECTURES = ("walk", "path", "subtree", "3layer")


@dataclass(frozen=True)
class LayerConfig:
    """Architecture of one layer before its filters are learned."""

    k: int
    q_out: int
    alpha: float
    kernel_flavor: str = "gaussian-dot"
    pooling: str = "sum"
    epsilon: float = 0.01
    mode: str = "path"


@dataclass(frozen=True)
class OutputSpec:
    """Which 1-based layer positions feed the graph embedding, and the global
    pooling applied to each (None = reuse that layer's local pooling)."""

    layers: tuple
    global_pooling: Optional[str] = None


@dataclass(frozen=True)
class ModelConfig:
    layers: tuple
    output: OutputSpec


@dataclass
class GcknModel:
    layers: list
    output_spec: OutputSpec
    encoding: Optional[AttributeEncoding] = None
    embed_stats: Optional[tuple] = None

    def __post_init__(self):
        for j in range(1, len(self.layers)):
            if self.layers[j].q_in != self.layers[j - 1].q_out:
                raise DimensionMismatchError(
                    f"layer {j + 1} expects q_in={self.layers[j].q_in}, "
                    f"previous layer outputs {self.layers[j - 1].q_out}"
                )
        for lid in self.output_spec.layers:
            if not 1 <= lid <= len(self.layers):
                raise SegmentMismatchError(f"output spec references layer {lid}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].q_in

    def embedding_dim(self) -> int:
        return sum(self.layers[lid - 1].q_out for lid in self.output_spec.layers)


@dataclass
class GraphEmbedding:
    """Embedding vector plus (layer id, k, offset, length) provenance."""

    vector: np.ndarray
    segments: tuple


def make_config(arch: str, k1: int, q: int, sigma: float,
                pooling: str = "sum", global_pooling: Optional[str] = None,
                epsilon: float = 0.01, one_hot_input: bool = True) -> ModelConfig:
    """Named architectures:

    walk    one layer over length-k1 walks
    path    one layer over length-k1 paths
    subtree two layers, second with k=0 (pointwise nonlinearity over
            per-node path aggregates)
    3layer  k2=2 middle layer, k3=0 top layer

    First layer uses the gaussian flavor when inputs are one-hot rows,
    homogeneous otherwise; upper layers are always homogeneous since their
    inputs have no norm guarantee.
    """
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r}; expected one of {ARCHITECTURES}")
    alpha = 1.0 / (sigma * sigma)
    first_flavor = "gaussian-dot" if one_hot_input else "homogeneous-dot"
    first_mode = "walk" if arch == "walk" else "path"
    layers = [LayerConfig(k=k1, q_out=q, alpha=alpha, kernel_flavor=first_flavor,
                          pooling=pooling, epsilon=epsilon, mode=first_mode)]
    if arch == "subtree":
        layers.append(LayerConfig(k=0, q_out=q, alpha=alpha,
                                  kernel_flavor="homogeneous-dot",
                                  pooling=pooling, epsilon=epsilon))
    elif arch == "3layer":
        layers.append(LayerConfig(k=2, q_out=q, alpha=alpha,
                                  kernel_flavor="homogeneous-dot",
                                  pooling=pooling, epsilon=epsilon))
        layers.append(LayerConfig(k=0, q_out=q, alpha=alpha,
                                  kernel_flavor="homogeneous-dot",
                                  pooling=pooling, epsilon=epsilon))
    out = OutputSpec(layers=(len(layers),), global_pooling=global_pooling)
    return ModelConfig(layers=tuple(layers), output=out)


# ---------------------------------------------------------------------------
# forward

def _global_pool(features: np.ndarray, how: str) -> np.ndarray:
    if features.shape[0] == 0:
        return np.zeros(features.shape[1])
    if how == "sum":
        return features.sum(axis=0)
    if how == "mean":
        return features.mean(axis=0)
    if how == "max":
        return features.max(axis=0)
    raise ValueError(f"unknown pooling {how!r}")


def run_layers(graph: Graph, model: GcknModel, cache: Optional[PathCache] = None,
               inv_sqrts: Optional[Sequence[np.ndarray]] = None,
               masks: Optional[Sequence[np.ndarray]] = None,
               fast_walk: bool = False):
    """Node feature maps after every layer (list of arrays)."""
    cache = cache or shared_cache
    if graph.attributes.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"graph attribute dim {graph.attributes.shape[1]}, "
            f"model expects {model.input_dim}"
        )
    feats = graph.attributes
    outputs = []
    for j, params in enumerate(model.layers):
        inv = inv_sqrts[j] if inv_sqrts is not None else None
        mask = masks[j] if masks is not None else None
        if (fast_walk and mask is None and params.mode == "walk"
                and params.kernel_flavor == "gaussian-dot" and params.pooling != "max"):
            feats = walk_layer_forward_fast(
                graph, NodeFeatureMap(graph.uid, feats), params, inv_sqrt=inv
            ).features
        else:
            table = cache.get(graph, params.k, params.mode)
            feats, _ = layer_apply(feats, table, params, inv_sqrt=inv, path_scale=mask)
        outputs.append(feats)
    return outputs


def assemble_embedding(model: GcknModel, layer_outputs, n_nodes: int) -> GraphEmbedding:
    parts = []
    segments = []
    offset = 0
    for lid in model.output_spec.layers:
        params = model.layers[lid - 1]
        how = model.output_spec.global_pooling or params.pooling
        vec = _global_pool(layer_outputs[lid - 1], how)
        segments.append((lid, params.k, offset, len(vec)))
        offset += len(vec)
        parts.append(vec)
    vector = np.concatenate(parts)
    if model.embed_stats is not None:
        mean, std = model.embed_stats
        vector = (vector - mean) / std
    return GraphEmbedding(vector=vector, segments=tuple(segments))


def model_forward(graph: Graph, model: GcknModel, cache: Optional[PathCache] = None,
                  inv_sqrts: Optional[Sequence[np.ndarray]] = None,
                  fast_walk: bool = False) -> GraphEmbedding:
    """Embedding of one graph: run layers in order, globally pool the
    requested layer outputs, concatenate, standardize if stats are stored."""
    outputs = run_layers(graph, model, cache=cache, inv_sqrts=inv_sqrts,
                         fast_walk=fast_walk)
    return assemble_embedding(model, outputs, graph.n_nodes)


def precompute_inv_sqrts(model: GcknModel):
    """One inverse-sqrt Gram per layer, for reuse across a batch of graphs."""
    return [inverse_sqrt_gram_full(p)[0] for p in model.layers]


def embed_dataset(graphs, model: GcknModel, cache: Optional[PathCache] = None,
                  fast_walk: bool = True) -> np.ndarray:
    """Stacked embeddings (one row per graph, deterministic order)."""
    inv_sqrts = precompute_inv_sqrts(model)
    rows = []
    segments = None
    for g in graphs:
        emb = model_forward(g, model, cache=cache, inv_sqrts=inv_sqrts,
                            fast_walk=fast_walk)
        if segments is None:
            segments = emb.segments
        elif emb.segments != segments:
            raise SegmentMismatchError("inconsistent embedding segments across graphs")
        rows.append(emb.vector)
    return np.vstack(rows) if rows else np.zeros((0, model.embedding_dim()))


def concat_multiscale(embeddings: Sequence[GraphEmbedding]) -> GraphEmbedding:
    """Concatenate embeddings of one graph from several models (e.g. different
    path lengths); the induced linear kernel is the sum of per-part kernels."""
    if not embeddings:
        raise SegmentMismatchError("nothing to concatenate")
    parts = []
    segments = []
    offset = 0
    for emb in embeddings:
        for (lid, k, off, length) in emb.segments:
            segments.append((lid, k, offset + off, length))
        parts.append(emb.vector)
        offset += len(emb.vector)
    return GraphEmbedding(vector=np.concatenate(parts), segments=tuple(segments))


# ---------------------------------------------------------------------------
# serialization: versioned JSON with base64 float64 payloads

def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape),
            "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(obj) -> np.ndarray:
    try:
        raw = base64.b64decode(obj["data"], validate=True)
        a = np.frombuffer(raw, dtype="<f8").reshape(obj["shape"])
    except Exception as exc:
        raise CorruptModelError(f"bad array payload: {exc}") from exc
    return a.astype(np.float64)


def _encoding_to_json(enc: Optional[AttributeEncoding]):
    if enc is None:
        return None
    return {
        "mode": enc.mode,
        "vocabulary": list(enc.vocabulary) if enc.vocabulary is not None else None,
        "mean": _encode_array(enc.mean) if enc.mean is not None else None,
        "std": _encode_array(enc.std) if enc.std is not None else None,
    }


def _encoding_from_json(obj) -> Optional[AttributeEncoding]:
    if obj is None:
        return None
    return AttributeEncoding(
        mode=obj["mode"],
        vocabulary=tuple(obj["vocabulary"]) if obj.get("vocabulary") is not None else None,
        mean=_decode_array(obj["mean"]) if obj.get("mean") is not None else None,
        std=_decode_array(obj["std"]) if obj.get("std") is not None else None,
    )


def save_model(model: GcknModel, path, classifier=None):
    """Write the model (and optionally a trained linear classifier) as JSON.
    Matrices are embedded as base64 little-endian float64, so a load/save
    round trip is bit-exact."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layers": [
            {
                "k": p.k, "q_in": p.q_in, "q_out": p.q_out,
                "alpha": p.alpha, "kernel_flavor": p.kernel_flavor,
                "pooling": p.pooling, "epsilon": p.epsilon, "mode": p.mode,
                "filters": _encode_array(p.filters),
            }
            for p in model.layers
        ],
        "output_spec": {
            "layers": list(model.output_spec.layers),
            "global_pooling": model.output_spec.global_pooling,
        },
        "encoding": _encoding_to_json(model.encoding),
        "embed_stats": (
            None if model.embed_stats is None else
            {"mean": _encode_array(model.embed_stats[0]),
             "std": _encode_array(model.embed_stats[1])}
        ),
        "classifier": (
            None if classifier is None else
            {"weights": _encode_array(classifier.weights),
             "intercepts": _encode_array(classifier.intercepts),
             "lambda": classifier.lam}
        ),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _load_doc(path) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorruptModelError(f"not a valid model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise CorruptModelError("not a model file (missing format tag)")
    if doc.get("version") != MODEL_VERSION:
        raise SchemaVersionMismatchError(
            f"model file version {doc.get('version')!r}, expected {MODEL_VERSION}"
        )
    return doc


def load_model(path) -> GcknModel:
    doc = _load_doc(path)
    try:
        layers = [
            LayerParams(
                k=ld["k"], q_in=ld["q_in"], q_out=ld["q_out"],
                filters=_decode_array(ld["filters"]),
                alpha=ld["alpha"], kernel_flavor=ld["kernel_flavor"],
                pooling=ld["pooling"], epsilon=ld["epsilon"], mode=ld["mode"],
            )
            for ld in doc["layers"]
        ]
        spec = OutputSpec(layers=tuple(doc["output_spec"]["layers"]),
                          global_pooling=doc["output_spec"]["global_pooling"])
        stats = doc.get("embed_stats")
        embed_stats = (
            None if stats is None else
            (_decode_array(stats["mean"]), _decode_array(stats["std"]))
        )
        return GcknModel(layers=layers, output_spec=spec,
                         encoding=_encoding_from_json(doc.get("encoding")),
                         embed_stats=embed_stats)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (CorruptModelError, SchemaVersionMismatchError)):
            raise
        raise CorruptModelError(f"malformed model document: {exc}") from exc


def load_classifier(path):
    from .svm import LinearClassifier

    doc = _load_doc(path)
    obj = doc.get("classifier")
    if obj is None:
        return None
    try:
        return LinearClassifier(weights=_decode_array(obj["weights"]),
                                intercepts=_decode_array(obj["intercepts"]),
                                lam=obj["lambda"])
    except (KeyError, TypeError) as exc:
        raise CorruptModelError(f"malformed classifier block: {exc}") from exc
