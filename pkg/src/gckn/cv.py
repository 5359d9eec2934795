"""Cross-validated evaluation with grid search.

Per fold: hyperparameters (and the regularization coefficient, plus the
epoch count in supervised mode) are chosen on a held-out 10% slice of the
training fold, the winning configuration is refit on the whole training
fold, and accuracy is reported on the test fold. Nested k-fold selection is
deliberately avoided: it multiplies cost by the fold count for little gain
at this scale.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datasets import DatasetBundle, standardize_attributes, stratified_kfold
from .model import embed_dataset, make_config
from .paths import PathCache
from .sup import train_supervised
from .svm import accuracy, train_squared_hinge
from .unsup import fit_unsupervised

LAMBDA_COEFFS = np.logspace(-3, 4, 60)
SUP_LAMBDAS = (0.01, 0.001, 0.0001, 1e-05, 1e-06, 1e-07)

FULL_GRID = {
    "sigma": (0.3, 0.4, 0.5, 0.6, 1.0, 1.5, 2.0),
    "pooling": ("sum", "mean", "max"),
    "k1": tuple(range(2, 13)),
    "q": (32, 128, 512, 1024),
}

FAST_GRID = {
    "sigma": (0.4, 0.6),
    "pooling": ("sum",),
    "k1": (2, 3),
    "q": (512,),
}


@dataclass(frozen=True)
class GridPoint:
    k1: int
    sigma: float
    q: int
    pooling: str


def expand_grid(grid: dict) -> list:
    return [GridPoint(k1=k1, sigma=s, q=q, pooling=p)
            for k1, s, q, p in itertools.product(
                grid["k1"], grid["sigma"], grid["q"], grid["pooling"])]


@dataclass
class FoldResult:
    repeat: int
    fold: int
    k1: int
    sigma: float
    q: int
    pooling: str
    lambda_coeff: float
    epochs: int
    val_acc: float
    test_acc: float


@dataclass
class CvResult:
    rows: list
    mean: float
    std: float

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["repeat", "fold", "k1", "sigma", "q", "pooling",
                             "lambda_coeff", "epochs", "val_acc", "test_acc"])
            for r in self.rows:
                writer.writerow([r.repeat, r.fold, r.k1, r.sigma, r.q, r.pooling,
                                 repr(r.lambda_coeff), r.epochs,
                                 repr(r.val_acc), repr(r.test_acc)])
            writer.writerow(["summary", "", "", "", "", "", "", "",
                             repr(self.mean), repr(self.std)])


def _fold_seed(seed: int, repeat: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, repeat, fold]).generate_state(1)[0])


def _prepare(bundle: DatasetBundle, indices):
    sub = bundle.subset(indices)
    if bundle.encoding.mode == "continuous":
        sub, enc = standardize_attributes(sub)
        return sub, enc
    return sub, None


def _apply_enc(bundle: DatasetBundle, indices, enc):
    from .datasets import apply_standardization

    sub = bundle.subset(indices)
    if enc is None:
        return sub
    sub.graphs = [apply_standardization(g, enc) for g in sub.graphs]
    return sub


def _sweep_lambda(x_fit, y_fit, x_val, y_val, coeffs):
    best = (-1.0, None)
    n = len(y_fit)
    for coeff in coeffs:
        clf = train_squared_hinge(x_fit, y_fit, lam=coeff / n)
        acc = accuracy(clf, x_val, y_val)
        if acc > best[0]:
            best = (acc, float(coeff))
    return best


def cv_evaluate(bundle: DatasetBundle, arch: str, mode: str = "unsup",
                seed: int = 0, n_folds: int = 10, grid: Optional[dict] = None,
                fast: bool = False, repeats: int = 1,
                n_sample_paths: int = 300_000,
                sup_epochs: int = 50, sup_lambdas: Sequence[float] = SUP_LAMBDAS,
                lambda_coeffs: Sequence[float] = tuple(LAMBDA_COEFFS),
                cache: Optional[PathCache] = None,
                progress=None) -> CvResult:
    """Stratified k-fold evaluation of one architecture. Deterministic given
    (dataset, flags, seed)."""
    if mode not in ("unsup", "sup"):
        raise ValueError("mode must be 'unsup' or 'sup'")
    cache = cache or PathCache()
    grid_points = expand_grid(grid or (FAST_GRID if fast else FULL_GRID))
    one_hot = bundle.encoding.mode == "one-hot"
    y = bundle.graph_labels
    rows = []
    for repeat in range(repeats):
        folds = stratified_kfold(y, n_folds, _fold_seed(seed, repeat, 9999))
        for split in folds:
            fseed = _fold_seed(seed, repeat, split.fold_id)
            inner = stratified_kfold(y[split.train_indices], 10,
                                     _fold_seed(seed, repeat, split.fold_id + 5000))[0]
            subtrain_idx = split.train_indices[inner.train_indices]
            val_idx = split.train_indices[inner.test_indices]

            subtrain, enc = _prepare(bundle, subtrain_idx)
            val = _apply_enc(bundle, val_idx, enc)
            best = None  # (val_acc, gp, coeff, epochs)
            for gp in grid_points:
                cfg = make_config(arch, k1=gp.k1, q=gp.q, sigma=gp.sigma,
                                  pooling=gp.pooling, one_hot_input=one_hot)
                if mode == "unsup":
                    model = fit_unsupervised(subtrain.graphs, cfg, fseed,
                                             n_sample_paths=n_sample_paths,
                                             cache=cache)
                    x_fit = embed_dataset(subtrain.graphs, model, cache=cache)
                    x_val = embed_dataset(val.graphs, model, cache=cache)
                    acc, coeff = _sweep_lambda(x_fit, subtrain.graph_labels,
                                               x_val, val.graph_labels,
                                               lambda_coeffs)
                    cand = (acc, gp, coeff, 0)
                else:
                    init = fit_unsupervised(subtrain.graphs, cfg, fseed,
                                            n_sample_paths=n_sample_paths,
                                            cache=cache)
                    for lam in sup_lambdas:
                        _, _, log, _ = train_supervised(
                            subtrain.graphs, subtrain.graph_labels, init,
                            lam=lam, n_epochs=sup_epochs, seed=fseed,
                            cache=cache, val_graphs=val.graphs,
                            val_labels=val.graph_labels)
                        accs = [r.val_acc for r in log]
                        e_best = int(np.argmax(accs)) + 1
                        cand = (float(accs[e_best - 1]), gp, lam, e_best)
                        if best is None or cand[0] > best[0]:
                            best = cand
                    continue
                if best is None or cand[0] > best[0]:
                    best = cand
                if progress:
                    progress(f"repeat {repeat} fold {split.fold_id} {gp}: "
                             f"val={cand[0]:.3f}")

            val_acc, gp, coeff, epochs = best
            train, enc = _prepare(bundle, split.train_indices)
            test = _apply_enc(bundle, split.test_indices, enc)
            cfg = make_config(arch, k1=gp.k1, q=gp.q, sigma=gp.sigma,
                              pooling=gp.pooling, one_hot_input=one_hot)
            if mode == "unsup":
                model = fit_unsupervised(train.graphs, cfg, fseed,
                                         n_sample_paths=n_sample_paths,
                                         cache=cache)
                x_train = embed_dataset(train.graphs, model, cache=cache)
                clf = train_squared_hinge(x_train, train.graph_labels,
                                          lam=coeff / len(train.graphs))
            else:
                init = fit_unsupervised(train.graphs, cfg, fseed,
                                        n_sample_paths=n_sample_paths,
                                        cache=cache)
                model, clf, _, _ = train_supervised(
                    train.graphs, train.graph_labels, init, lam=coeff,
                    n_epochs=epochs, seed=fseed, cache=cache)
            x_test = embed_dataset(test.graphs, model, cache=cache)
            test_acc = accuracy(clf, x_test, test.graph_labels)
            rows.append(FoldResult(repeat=repeat, fold=split.fold_id,
                                   k1=gp.k1, sigma=gp.sigma, q=gp.q,
                                   pooling=gp.pooling, lambda_coeff=coeff,
                                   epochs=epochs, val_acc=val_acc,
                                   test_acc=test_acc))
            if progress:
                progress(f"repeat {repeat} fold {split.fold_id}: "
                         f"test={test_acc:.3f} ({gp}, coeff={coeff:.4g})")
    accs = np.array([r.test_acc for r in rows])
    return CvResult(rows=rows, mean=float(accs.mean()), std=float(accs.std()))
