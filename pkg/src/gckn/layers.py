"""One projection layer: kernel comparison of path attribute vectors against
a set of anchor filters, projection through the inverse square root of the
filter Gram matrix, and pooling of per-path outputs into per-node features.

Two kernel flavors are supported on raw concatenated vectors z, z':

* gaussian-dot:     exp(-alpha/2 ||z - z'||^2)
* homogeneous-dot:  ||z|| ||z'|| sigma(<z,z'> / (||z|| ||z'||)),
                    sigma(x) = exp(alpha (x - 1)), 0 if either norm is 0.

The flavors coincide on unit-norm inputs. The homogeneous flavor is the
right choice for upper layers and continuous inputs, where norms vary.

Forward and backward passes share the same primitives; gradients are exact
(validated against central finite differences in the test suite), except that
eigenvalues clamped by the floor contribute zero derivative there.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatchError,
    EigenFailureError,
    UnsupportedFlavorError,
)
from .graphs import Graph
from .paths import PathTable

FLAVORS = ("gaussian-dot", "homogeneous-dot")
POOLINGS = ("sum", "mean", "max")
MODES = ("path", "walk")


@dataclass(frozen=True)
class LayerParams:
    """Configuration + filters of one layer.

    filters has shape (q_in * (k+1), q_out): one column per anchor filter,
    laid out as k+1 stacked node blocks. alpha = 1/sigma^2 is the kernel
    bandwidth; epsilon regularizes the filter Gram diagonal (and is the
    default eigenvalue floor for the inverse square root).
    """

    k: int
    q_in: int
    q_out: int
    filters: np.ndarray
    alpha: float
    kernel_flavor: str = "gaussian-dot"
    pooling: str = "sum"
    epsilon: float = 0.01
    mode: str = "path"

    def __post_init__(self):
        if self.kernel_flavor not in FLAVORS:
            raise UnsupportedFlavorError(f"unknown kernel flavor {self.kernel_flavor!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.alpha <= 0 or self.epsilon <= 0:
            raise ValueError("alpha and epsilon must be > 0")
        expect = (self.q_in * (self.k + 1), self.q_out)
        if self.filters.shape != expect:
            raise DimensionMismatchError(
                f"filters shape {self.filters.shape}, expected {expect}"
            )

    @property
    def input_width(self) -> int:
        return self.q_in * (self.k + 1)

    def with_filters(self, filters: np.ndarray) -> "LayerParams":
        return replace(self, filters=filters)


@dataclass
class NodeFeatureMap:
    """Dense per-node feature matrix for one graph (n_nodes x q)."""

    graph_uid: int
    features: np.ndarray


def sigma_dot(x, alpha: float):
    """exp(alpha (x - 1)) applied to a normalized dot product; sigma(1) = 1."""
    return np.exp(alpha * (np.asarray(x, dtype=np.float64) - 1.0))


def normalize_filters(filters: np.ndarray, k: int, convention: str) -> np.ndarray:
    """Rescale filter columns: "whole" makes each column unit-norm, "blocks"
    makes each of its k+1 node blocks unit-norm, "none" leaves them alone.
    Zero(-block) columns pass through unscaled."""
    z = np.array(filters, dtype=np.float64)
    if convention == "none":
        return z
    if convention == "whole":
        norms = np.linalg.norm(z, axis=0)
        norms[norms == 0] = 1.0
        return z / norms
    if convention == "blocks":
        q_in = z.shape[0] // (k + 1)
        blocks = z.reshape(k + 1, q_in, z.shape[1])
        norms = np.linalg.norm(blocks, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return (blocks / norms).reshape(z.shape)
    raise ValueError(f"unknown normalization convention {convention!r}")


# ---------------------------------------------------------------------------
# pairwise kernel matrices and their adjoints

def _gaussian_matrix(x: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    sq = np.maximum(
        np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :] - 2.0 * (x @ y.T),
        0.0,
    )
    return np.exp(-0.5 * alpha * sq)


def _gaussian_backward(x, y, kmat, dk, alpha):
    t = dk * kmat
    dx = alpha * (t @ y - t.sum(axis=1)[:, None] * x)
    dy = alpha * (t.T @ x - t.sum(axis=0)[:, None] * y)
    return dx, dy


def _homogeneous_matrix(x, y, alpha, want_aux=False):
    r = np.linalg.norm(x, axis=1)
    s = np.linalg.norm(y, axis=1)
    rs = np.where(r == 0, 1.0, r)
    ss = np.where(s == 0, 1.0, s)
    xh = x / rs[:, None]
    yh = y / ss[:, None]
    c = np.clip(xh @ yh.T, -1.0, 1.0)
    kmat = (r[:, None] * s[None, :]) * np.exp(alpha * (c - 1.0))
    if not want_aux:
        return kmat
    return kmat, (r, s, xh, yh, c)


def _homogeneous_backward(aux, kmat, dk, alpha):
    r, s, xh, yh, c = aux
    t = dk * kmat
    rs = np.where(r == 0, 1.0, r)
    ss = np.where(s == 0, 1.0, s)
    # d/dx ( r s sigma(c) ) = (K/r) x_hat + alpha K (y_hat - c x_hat)/r
    tc = t * (1.0 - alpha * c)
    dx = (tc.sum(axis=1)[:, None] * xh + alpha * (t @ yh)) / rs[:, None]
    dy = (tc.sum(axis=0)[:, None] * yh + alpha * (t.T @ xh)) / ss[:, None]
    # zero-norm rows: kernel row is identically 0, keep zero gradient
    dx[r == 0] = 0.0
    dy[s == 0] = 0.0
    return dx, dy


def kernel_matrix(x: np.ndarray, y: np.ndarray, alpha: float, flavor: str) -> np.ndarray:
    """Pairwise kernel values between rows of x and rows of y."""
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchError(f"row widths differ: {x.shape[1]} vs {y.shape[1]}")
    if flavor == "gaussian-dot":
        return _gaussian_matrix(x, y, alpha)
    if flavor == "homogeneous-dot":
        return _homogeneous_matrix(x, y, alpha)
    raise UnsupportedFlavorError(f"unknown kernel flavor {flavor!r}")


def kernel_eval(z: np.ndarray, z2: np.ndarray, params: LayerParams) -> float:
    """Kernel value between two path attribute vectors under params."""
    z = np.asarray(z, dtype=np.float64).reshape(1, -1)
    z2 = np.asarray(z2, dtype=np.float64).reshape(1, -1)
    if z.shape[1] != params.input_width or z2.shape[1] != params.input_width:
        raise DimensionMismatchError(
            f"vector lengths {z.shape[1]}, {z2.shape[1]}; layer expects {params.input_width}"
        )
    return float(kernel_matrix(z, z2, params.alpha, params.kernel_flavor)[0, 0])


# ---------------------------------------------------------------------------
# inverse square root of the filter Gram matrix

def _filter_gram(params: LayerParams) -> np.ndarray:
    f = params.filters.T
    return kernel_matrix(f, f, params.alpha, params.kernel_flavor)


def inverse_sqrt_gram_full(params: LayerParams, eig_floor: Optional[float] = None):
    """(M, eigvecs, floored eigvals) with M = (gram + eps I)^(-1/2)."""
    floor = params.epsilon if eig_floor is None else eig_floor
    a = _filter_gram(params) + params.epsilon * np.eye(params.q_out)
    try:
        lam, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailureError(f"eigendecomposition failed: {exc}") from exc
    lam = np.maximum(lam, floor)
    m = (u / np.sqrt(lam)) @ u.T
    return m, u, lam


def inverse_sqrt_gram(params: LayerParams, eig_floor: Optional[float] = None) -> np.ndarray:
    """Symmetric positive definite (gram(filters) + eps I)^(-1/2)."""
    return inverse_sqrt_gram_full(params, eig_floor)[0]


def inverse_sqrt_backward(dm: np.ndarray, u: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Adjoint of A -> A^(-1/2) at A = U diag(lam) U^T, for symmetric A.

    Uses the divided-difference kernel -1/(sqrt(li) sqrt(lj) (sqrt(li)+sqrt(lj)));
    the incoming cotangent is symmetrized since A is constrained symmetric.
    """
    dm = 0.5 * (dm + dm.T)
    sq = np.sqrt(lam)
    denom = sq[:, None] * sq[None, :] * (sq[:, None] + sq[None, :])
    f = -1.0 / denom
    da = u @ (f * (u.T @ dm @ u)) @ u.T
    return 0.5 * (da + da.T)


def project_path(z: np.ndarray, params: LayerParams, inv_sqrt: np.ndarray) -> np.ndarray:
    """Finite-dimensional embedding of one path vector: inv_sqrt @ k_z where
    (k_z)_i = kernel(filter_i, z)."""
    z = np.asarray(z, dtype=np.float64).reshape(1, -1)
    if z.shape[1] != params.input_width:
        raise DimensionMismatchError(
            f"vector length {z.shape[1]}; layer expects {params.input_width}"
        )
    kz = kernel_matrix(params.filters.T, z, params.alpha, params.kernel_flavor)[:, 0]
    return inv_sqrt @ kz


# ---------------------------------------------------------------------------
# segment pooling over the per-path projections

def _segment_sum(values: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    cs = np.vstack([np.zeros((1, values.shape[1])), np.cumsum(values, axis=0)])
    return cs[offsets[1:]] - cs[offsets[:-1]]


def _pool(b: np.ndarray, offsets: np.ndarray, pooling: str, want_tape: bool):
    counts = np.diff(offsets)
    n = len(counts)
    tape = None
    if pooling in ("sum", "mean"):
        out = _segment_sum(b, offsets)
        if pooling == "mean":
            denom = np.where(counts == 0, 1, counts).astype(np.float64)
            out = out / denom[:, None]
        if want_tape:
            tape = counts
        return out, tape
    # max pooling, coordinatewise; empty segments stay zero by convention
    out = np.zeros((n, b.shape[1]))
    argmax = np.full((n, b.shape[1]), -1, dtype=np.int64)
    for u in range(n):
        lo, hi = offsets[u], offsets[u + 1]
        if hi > lo:
            seg = b[lo:hi]
            am = np.argmax(seg, axis=0)
            out[u] = seg[am, np.arange(b.shape[1])]
            argmax[u] = lo + am
    if want_tape:
        tape = (counts, argmax)
    return out, tape


def _unpool(dout: np.ndarray, offsets: np.ndarray, pooling: str, tape, m: int):
    db = np.zeros((m, dout.shape[1]))
    if pooling in ("sum", "mean"):
        counts = tape
        scale = dout
        if pooling == "mean":
            denom = np.where(counts == 0, 1, counts).astype(np.float64)
            scale = dout / denom[:, None]
        db = np.repeat(scale, counts, axis=0)
        return db
    counts, argmax = tape
    cols = np.arange(dout.shape[1])
    for u in range(len(counts)):
        if counts[u] > 0:
            np.add.at(db, (argmax[u], cols), dout[u])
    return db


# ---------------------------------------------------------------------------
# the layer itself

def _check_inputs(features: np.ndarray, table: PathTable, params: LayerParams):
    if features.shape[1] != params.q_in:
        raise DimensionMismatchError(
            f"input width {features.shape[1]}, layer expects q_in={params.q_in}"
        )
    if table.k != params.k or table.mode != params.mode:
        raise DimensionMismatchError(
            f"path table (k={table.k}, mode={table.mode}) does not match layer "
            f"(k={params.k}, mode={params.mode})"
        )


def layer_apply(features: np.ndarray, table: PathTable, params: LayerParams,
                inv_sqrt: Optional[np.ndarray] = None,
                path_scale: Optional[np.ndarray] = None,
                want_tape: bool = False, eig: Optional[tuple] = None):
    """Core forward pass on one graph's features. Returns (out, tape); tape
    is None unless requested and carries everything the backward needs.

    path_scale optionally multiplies each path's attribute vector by a scalar
    before kernel evaluation (used by mask-based interpretation). eig may
    carry a precomputed (msqrt, u, lam) triple from inverse_sqrt_gram_full
    to share one decomposition across a batch of graphs.
    """
    _check_inputs(features, table, params)
    m = table.n_total
    f = params.filters.T
    # the tape path needs msqrt/u/lam from the same decomposition;
    # inverse_sqrt_gram_full is deterministic, so fresh == cached bit-for-bit
    if eig is not None:
        msqrt, u_eig, lam = eig
    elif want_tape or inv_sqrt is None:
        msqrt, u_eig, lam = inverse_sqrt_gram_full(params)
    else:
        msqrt, u_eig, lam = inv_sqrt, None, None

    p_raw = (features[table.flat].reshape(m, -1)
             if m else np.zeros((0, params.input_width)))
    if path_scale is not None:
        if path_scale.shape != (m,):
            raise DimensionMismatchError(
                f"path_scale has shape {path_scale.shape}, expected ({m},)"
            )
        p = p_raw * path_scale[:, None]
    else:
        p = p_raw

    aux = None
    if params.kernel_flavor == "gaussian-dot":
        kmat = _gaussian_matrix(p, f, params.alpha)
    else:
        kmat, aux = _homogeneous_matrix(p, f, params.alpha, want_aux=True)
    b = kmat @ msqrt
    out, pool_tape = _pool(b, table.offsets, params.pooling, want_tape)

    if not want_tape:
        return out, None
    tape = {
        "params": params, "table": table, "features": features,
        "p": p, "p_raw": p_raw, "path_scale": path_scale,
        "kmat": kmat, "aux": aux, "msqrt": msqrt, "u": u_eig, "lam": lam,
        "pool": pool_tape,
    }
    return out, tape


def layer_backward(tape: dict, dout: np.ndarray):
    """Adjoint of layer_apply. Returns (dfeatures, dfilters, dscale); dscale
    is None when no path_scale was used."""
    params: LayerParams = tape["params"]
    table: PathTable = tape["table"]
    m = table.n_total
    f = params.filters.T

    db = _unpool(dout, table.offsets, params.pooling, tape["pool"], m)
    dk = db @ tape["msqrt"]
    dmsqrt = tape["kmat"].T @ db

    if params.kernel_flavor == "gaussian-dot":
        dp, df1 = _gaussian_backward(tape["p"], f, tape["kmat"], dk, params.alpha)
    else:
        dp, df1 = _homogeneous_backward(tape["aux"], tape["kmat"], dk, params.alpha)

    # chain through (gram(filters) + eps I)^(-1/2)
    da = inverse_sqrt_backward(dmsqrt, tape["u"], tape["lam"])
    if params.kernel_flavor == "gaussian-dot":
        gram = _gaussian_matrix(f, f, params.alpha)
        dfx, dfy = _gaussian_backward(f, f, gram, da, params.alpha)
    else:
        gram, gaux = _homogeneous_matrix(f, f, params.alpha, want_aux=True)
        dfx, dfy = _homogeneous_backward(gaux, gram, da, params.alpha)
    dfilters = (df1 + dfx + dfy).T

    if tape["path_scale"] is not None:
        dscale = np.einsum("ij,ij->i", dp, tape["p_raw"])
        dp = dp * tape["path_scale"][:, None]
    else:
        dscale = None

    dfeatures = np.zeros_like(tape["features"])
    if m:
        np.add.at(dfeatures, table.flat.reshape(-1),
                  dp.reshape(m * (table.k + 1), params.q_in))
    return dfeatures, dfilters, dscale


def layer_forward(graph: Graph, input_map: NodeFeatureMap, paths: PathTable,
                  params: LayerParams, inv_sqrt: Optional[np.ndarray] = None,
                  path_scale: Optional[np.ndarray] = None) -> NodeFeatureMap:
    """Per-node output features: pool over each node's paths of the projected
    path attribute vectors. Nodes without length-k paths get zero rows."""
    out, _ = layer_apply(input_map.features, paths, params,
                         inv_sqrt=inv_sqrt, path_scale=path_scale)
    return NodeFeatureMap(graph.uid, out)


# ---------------------------------------------------------------------------
# fast recursive variant for walks (no enumeration)

def walk_layer_forward_fast(graph: Graph, input_map: NodeFeatureMap,
                            params: LayerParams,
                            inv_sqrt: Optional[np.ndarray] = None) -> NodeFeatureMap:
    """Walk-mode forward computed by the neighbor-sum recursion.

    Valid only for the gaussian flavor, which factorizes across positions;
    output matches layer_forward over enumerated walks. Max pooling has no
    recursive form and is rejected.
    """
    if params.kernel_flavor != "gaussian-dot":
        raise UnsupportedFlavorError(
            "fast walk recursion requires the position-separable gaussian flavor"
        )
    if params.mode != "walk":
        raise DimensionMismatchError("layer mode must be 'walk' for the fast variant")
    if params.pooling == "max":
        raise UnsupportedFlavorError("max pooling has no recursive walk form")
    features = input_map.features
    if features.shape[1] != params.q_in:
        raise DimensionMismatchError(
            f"input width {features.shape[1]}, layer expects q_in={params.q_in}"
        )
    k, q_in = params.k, params.q_in
    blocks = params.filters.reshape(k + 1, q_in, params.q_out)
    if inv_sqrt is None:
        inv_sqrt = inverse_sqrt_gram(params)

    # per-position kernel tables: g[t][u, i] = kernel(features[u], block t of filter i)
    g = [_gaussian_matrix(features, blocks[t].T, params.alpha) for t in range(k + 1)]

    n = graph.n_nodes
    if graph.edges:
        e = np.asarray(graph.edges, dtype=np.int64)
        heads = np.concatenate([e[:, 0], e[:, 1]])
        tails = np.concatenate([e[:, 1], e[:, 0]])
    else:
        heads = tails = np.zeros(0, dtype=np.int64)
    c = g[k]
    counts = np.ones(n)
    for j in range(1, k + 1):
        agg = np.zeros_like(c)
        np.add.at(agg, heads, c[tails])
        cnt = np.zeros(n)
        np.add.at(cnt, heads, counts[tails])
        c = g[k - j] * agg
        counts = cnt

    out = c @ inv_sqrt
    if params.pooling == "mean":
        denom = np.where(counts == 0, 1.0, counts)
        out = out / denom[:, None]
    return NodeFeatureMap(graph.uid, out)
