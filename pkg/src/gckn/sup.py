"""End-to-end supervised training: filters move by Adam on per-batch
gradients of the squared hinge objective (backpropagated through the
inverse-sqrt Gram projection), and the linear head is refit exactly at every
epoch boundary by the convex solver.

Embedding standardization statistics stay frozen at their initialization
values throughout training.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .autograd import model_tape_backward, model_tape_forward
from .layers import inverse_sqrt_gram_full
from .model import GcknModel, embed_dataset
from .paths import PathCache, shared_cache
from .svm import (
    LinearClassifier,
    accuracy,
    signed_targets,
    train_squared_hinge,
)


def batch_objective(batch_embeddings: np.ndarray, y, clf: LinearClassifier) -> float:
    """(1/n) sum of squared hinge losses over heads + lam ||w||^2."""
    n_classes = max(int(np.max(y)) + 1, 2)
    ys = signed_targets(np.asarray(y), n_classes)
    scores = batch_embeddings @ clf.weights.T + clf.intercepts
    slack = np.maximum(0.0, 1.0 - ys.T * scores)
    return float((slack ** 2).sum() / len(y) + clf.lam * (clf.weights ** 2).sum())


def model_backward(batch, model: GcknModel, clf: LinearClassifier,
                   cache: Optional[PathCache] = None, eigs=None):
    """Exact gradients of the batch objective.

    batch is a list of (graph, class) pairs. Returns (filter_grads, dW, db,
    loss) where filter_grads has one array per layer.
    """
    cache = cache or shared_cache
    if eigs is None:
        eigs = [inverse_sqrt_gram_full(p) for p in model.layers]
    n = len(batch)
    n_heads = clf.n_heads
    n_classes = 2 if n_heads == 1 else n_heads

    filter_grads = [np.zeros_like(p.filters) for p in model.layers]
    dw = 2.0 * clf.lam * clf.weights
    db = np.zeros(n_heads)
    loss = clf.lam * float((clf.weights ** 2).sum())

    for graph, label in batch:
        tape = model_tape_forward(graph, model, cache=cache, eigs=eigs)
        x = tape.vector
        scores = clf.weights @ x + clf.intercepts
        ys = signed_targets(np.array([label]), n_classes)[:, 0]
        slack = np.maximum(0.0, 1.0 - ys * scores)
        loss += float(slack @ slack) / n
        dscores = (-2.0 / n) * slack * ys
        dw += np.outer(dscores, x)
        db += dscores
        dx = clf.weights.T @ dscores
        # dscores already carries the 1/n factor, so grads accumulate directly
        fgrads, _ = model_tape_backward(tape, dx)
        for j, fg in enumerate(fgrads):
            filter_grads[j] += fg
    return filter_grads, dw, db, loss


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def for_arrays(cls, arrays):
        return cls(m=[np.zeros_like(a) for a in arrays],
                   v=[np.zeros_like(a) for a in arrays])

    def step(self, arrays, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.t += 1
        out = []
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= beta1
            m += (1 - beta1) * g
            v *= beta2
            v += (1 - beta2) * g * g
            mhat = m / (1 - beta1 ** self.t)
            vhat = v / (1 - beta2 ** self.t)
            out.append(a - lr * mhat / (np.sqrt(vhat) + eps))
        return out


@dataclass
class TrainLogRow:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_acc: float


def write_training_log(rows: Sequence[TrainLogRow], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "lr", "train_loss", "train_acc", "val_acc"])
        for r in rows:
            writer.writerow([r.epoch, r.lr, r.train_loss, r.train_acc, r.val_acc])


def learning_rate_at(epoch: int, base_lr: float = 0.01) -> float:
    """Base rate halved every 50 epochs (epochs counted from 0)."""
    return base_lr * (0.5 ** (epoch // 50))


def train_supervised(graphs: Sequence, labels, init: GcknModel, lam: float,
                     n_epochs: int, seed: int, batch_size: int = 32,
                     base_lr: float = 0.01, cache: Optional[PathCache] = None,
                     val_graphs=None, val_labels=None,
                     freeze_filters: bool = False,
                     snapshot_epochs=None):
    """Adam on the filters with per-batch gradients; (w, b) refit exactly at
    each epoch end. Returns (model, classifier, log, snapshots) where
    snapshots maps requested epoch counts to (filters, classifier) copies for
    epoch-count selection without retraining.
    """
    cache = cache or shared_cache
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels, dtype=np.int64)
    model = GcknModel(layers=list(init.layers), output_spec=init.output_spec,
                      encoding=init.encoding, embed_stats=init.embed_stats)
    snapshot_epochs = set(snapshot_epochs or [])
    snapshots = {}

    def refit_head():
        x = embed_dataset(graphs, model, cache=cache, fast_walk=False)
        return train_squared_hinge(x, labels, lam), x

    clf, x_train = refit_head()
    adam = AdamState.for_arrays([p.filters for p in model.layers])
    log = []
    n = len(graphs)
    halved_once = False

    for epoch in range(n_epochs):
        lr = learning_rate_at(epoch, base_lr)
        order = rng.permutation(n)
        if not freeze_filters:
            for lo in range(0, n, batch_size):
                idx = order[lo:lo + batch_size]
                batch = [(graphs[i], int(labels[i])) for i in idx]
                eigs = [inverse_sqrt_gram_full(p) for p in model.layers]
                fgrads, _, _, _ = model_backward(batch, model, clf,
                                                 cache=cache, eigs=eigs)
                finite = all(np.all(np.isfinite(g)) for g in fgrads)
                if not finite:
                    if not halved_once:
                        warnings.warn("non-finite gradient; halving learning rate")
                        base_lr *= 0.5
                        lr = learning_rate_at(epoch, base_lr)
                        halved_once = True
                    continue
                new_filters = adam.step([p.filters for p in model.layers],
                                        fgrads, lr)
                model.layers = [p.with_filters(f)
                                for p, f in zip(model.layers, new_filters)]
        clf, x_train = refit_head()
        train_loss = batch_objective(x_train, labels, clf)
        train_acc = accuracy(clf, x_train, labels)
        val_acc = float("nan")
        if val_graphs is not None:
            xv = embed_dataset(val_graphs, model, cache=cache, fast_walk=False)
            val_acc = accuracy(clf, xv, np.asarray(val_labels, dtype=np.int64))
        log.append(TrainLogRow(epoch=epoch, lr=lr, train_loss=train_loss,
                               train_acc=train_acc, val_acc=val_acc))
        if (epoch + 1) in snapshot_epochs:
            snapshots[epoch + 1] = (
                [p.filters.copy() for p in model.layers],
                LinearClassifier(clf.weights.copy(), clf.intercepts.copy(), clf.lam),
            )
    return model, clf, log, snapshots
