"""Linear classification of graph embeddings: squared hinge loss with L2
regularization, one-vs-all for more than two classes.

The objective per head is

    (1/n) sum_i max(0, 1 - y_i (<w, x_i> + b))^2 + lam ||w||^2

with an unregularized intercept. It is smooth and convex, so a quasi-Newton
solve from zero is deterministic and reliable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import NonFiniteError, SingleClassError


@dataclass
class LinearClassifier:
    """weights has one row per class head; binary problems use a single row
    (positive score = class 1)."""

    weights: np.ndarray
    intercepts: np.ndarray
    lam: float

    @property
    def n_heads(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def signed_targets(y: np.ndarray, n_classes: int) -> np.ndarray:
    """(n_heads, n) matrix of +/-1 targets; one head for binary problems."""
    y = np.asarray(y, dtype=np.int64)
    if n_classes == 2:
        return np.where(y == 1, 1.0, -1.0)[None, :]
    return np.where(y[None, :] == np.arange(n_classes)[:, None], 1.0, -1.0)


def _head_value_grad(wb: np.ndarray, x: np.ndarray, ys: np.ndarray, lam: float):
    w, b = wb[:-1], wb[-1]
    n = x.shape[0]
    margins = ys * (x @ w + b)
    slack = np.maximum(0.0, 1.0 - margins)
    value = float(slack @ slack) / n + lam * float(w @ w)
    coef = (-2.0 / n) * slack * ys
    grad = np.empty_like(wb)
    grad[:-1] = x.T @ coef + 2.0 * lam * w
    grad[-1] = coef.sum()
    return value, grad


def objective(weights: np.ndarray, intercepts: np.ndarray, x: np.ndarray,
              ysigned: np.ndarray, lam: float) -> float:
    """Total objective summed over heads (the quantity training minimizes)."""
    total = 0.0
    for h in range(weights.shape[0]):
        wb = np.concatenate([weights[h], [intercepts[h]]])
        total += _head_value_grad(wb, x, ysigned[h], lam)[0]
    return total


def train_squared_hinge(x: np.ndarray, y, lam: float, seed: int = 0,
                        tol: float = 1e-9, max_iter: int = 2000) -> LinearClassifier:
    """Fit all heads. Deterministic (cold start from zero; seed accepted for
    interface symmetry but unused)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("embeddings contain NaN/Inf")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClassError("need at least two classes to train")
    n_classes = int(classes.max()) + 1
    ysigned = signed_targets(y, n_classes)
    n_heads = ysigned.shape[0]

    weights = np.zeros((n_heads, x.shape[1]))
    intercepts = np.zeros(n_heads)
    for h in range(n_heads):
        res = minimize(
            _head_value_grad, np.zeros(x.shape[1] + 1), args=(x, ysigned[h], lam),
            jac=True, method="L-BFGS-B",
            options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-10},
        )
        weights[h] = res.x[:-1]
        intercepts[h] = res.x[-1]
    return LinearClassifier(weights=weights, intercepts=intercepts, lam=float(lam))


def decision_scores(clf: LinearClassifier, x: np.ndarray) -> np.ndarray:
    return x @ clf.weights.T + clf.intercepts


def predict(clf: LinearClassifier, x: np.ndarray) -> np.ndarray:
    """Class indices; argmax over heads with ties to the lowest index, or the
    sign of the single binary head."""
    scores = decision_scores(clf, x)
    if clf.n_heads == 1:
        return (scores[:, 0] > 0).astype(np.int64)
    return np.argmax(scores, axis=1).astype(np.int64)


def accuracy(clf: LinearClassifier, x: np.ndarray, y) -> float:
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(predict(clf, x) == y))
