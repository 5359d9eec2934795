"""Reverse-mode differentiation through a whole model.

The taped forward pass runs the exact same layer primitives as inference
(same code, same order), so its outputs are bit-identical to model_forward;
the backward pass returns gradients with respect to every layer's filters
and, when masks are supplied, with respect to each per-path mask entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ShapeMismatchError
from .graphs import Graph
from .layers import layer_apply, layer_backward
from .model import GcknModel, GraphEmbedding, _global_pool
from .paths import PathCache, shared_cache


@dataclass
class ModelTape:
    graph: Graph
    model: GcknModel
    layer_tapes: list
    layer_outputs: list
    segments: tuple
    raw_vector: np.ndarray
    vector: np.ndarray
    global_argmax: dict  # layer id -> per-coordinate argmax node (max pooling)


def model_tape_forward(graph: Graph, model: GcknModel,
                       cache: Optional[PathCache] = None,
                       masks: Optional[Sequence[np.ndarray]] = None,
                       eigs: Optional[Sequence[tuple]] = None) -> ModelTape:
    cache = cache or shared_cache
    if graph.attributes.shape[1] != model.input_dim:
        raise ShapeMismatchError(
            f"graph attribute dim {graph.attributes.shape[1]}, "
            f"model expects {model.input_dim}"
        )
    if masks is not None and len(masks) != len(model.layers):
        raise ShapeMismatchError(
            f"{len(masks)} masks for {len(model.layers)} layers"
        )
    feats = graph.attributes
    tapes, outputs = [], []
    for j, params in enumerate(model.layers):
        table = cache.get(graph, params.k, params.mode)
        mask = None
        if masks is not None:
            mask = np.asarray(masks[j], dtype=np.float64)
            if mask.shape != (table.n_total,):
                raise ShapeMismatchError(
                    f"layer {j + 1} mask has shape {mask.shape}, "
                    f"graph has {table.n_total} paths of length {params.k}"
                )
        feats, tape = layer_apply(feats, table, params, path_scale=mask,
                                  want_tape=True,
                                  eig=eigs[j] if eigs is not None else None)
        tapes.append(tape)
        outputs.append(feats)

    parts, segments = [], []
    offset = 0
    global_argmax = {}
    for lid in model.output_spec.layers:
        params = model.layers[lid - 1]
        how = model.output_spec.global_pooling or params.pooling
        h = outputs[lid - 1]
        vec = _global_pool(h, how)
        if how == "max" and h.shape[0]:
            global_argmax[lid] = np.argmax(h, axis=0)
        segments.append((lid, params.k, offset, len(vec)))
        offset += len(vec)
        parts.append(vec)
    raw = np.concatenate(parts)
    vec = raw
    if model.embed_stats is not None:
        mean, std = model.embed_stats
        vec = (raw - mean) / std
    return ModelTape(graph=graph, model=model, layer_tapes=tapes,
                     layer_outputs=outputs, segments=tuple(segments),
                     raw_vector=raw, vector=vec, global_argmax=global_argmax)


def embedding_of(tape: ModelTape) -> GraphEmbedding:
    return GraphEmbedding(vector=tape.vector, segments=tape.segments)


def model_tape_backward(tape: ModelTape, dvec: np.ndarray):
    """Gradients (filter_grads per layer, mask_grads per layer or None) of a
    scalar whose gradient w.r.t. the final embedding vector is dvec."""
    model = tape.model
    draw = dvec
    if model.embed_stats is not None:
        draw = dvec / model.embed_stats[1]

    # route global-pooling gradients back onto per-layer node features
    dh = [np.zeros_like(out) for out in tape.layer_outputs]
    for (lid, _k, offset, length) in tape.segments:
        params = model.layers[lid - 1]
        how = model.output_spec.global_pooling or params.pooling
        dseg = draw[offset:offset + length]
        h = tape.layer_outputs[lid - 1]
        n = h.shape[0]
        if n == 0:
            continue
        if how == "sum":
            dh[lid - 1] += dseg[None, :]
        elif how == "mean":
            dh[lid - 1] += dseg[None, :] / n
        else:
            am = tape.global_argmax[lid]
            np.add.at(dh[lid - 1], (am, np.arange(length)), dseg)

    filter_grads = [None] * len(model.layers)
    mask_grads = [None] * len(model.layers)
    carried = None
    for j in range(len(model.layers) - 1, -1, -1):
        dout = dh[j] if carried is None else dh[j] + carried
        dfeat, dfilt, dscale = layer_backward(tape.layer_tapes[j], dout)
        filter_grads[j] = dfilt
        mask_grads[j] = dscale
        carried = dfeat
    return filter_grads, mask_grads
