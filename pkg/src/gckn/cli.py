"""Command-line interface.

Subcommands: fit-unsup, fit-sup, cv, embed, gram, interpret. Every command
writes its delimited outputs, a rendered figure where it makes sense, and a
run-manifest.json capturing flags, seed and library versions, into --out.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys

import numpy as np

from . import __version__
from .cv import FAST_GRID, FULL_GRID, cv_evaluate
from .datasets import load_tu_dataset, standardize_attributes
from .errors import GcknError
from .exact import gram_matrix, write_gram_csv
from .interpret import (
    extract_motif,
    motif_dot,
    motif_edge_list_text,
    optimize_mask,
)
from .model import (
    embed_dataset,
    load_classifier,
    load_model,
    make_config,
    save_model,
)
from .paths import PathCache
from .sup import train_supervised, write_training_log
from .svm import train_squared_hinge
from .unsup import fit_unsupervised


def _scalar(x):
    return x.item() if isinstance(x, np.generic) else x


def write_manifest(outdir, args, extra=None):
    import matplotlib
    import scipy

    doc = {
        "command": args.command,
        "flags": {k: _scalar(v) for k, v in sorted(vars(args).items())
                  if k != "command"},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
            "gckn": __version__,
        },
    }
    if extra:
        doc.update(extra)
    with open(os.path.join(outdir, "run-manifest.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def _add_common(p):
    p.add_argument("--dataset", required=True, help="dataset name (directory stem)")
    p.add_argument("--datadir", default="data", help="root of TU-format datasets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="gckn-out", help="output directory")
    p.add_argument("--cap-paths", type=int, default=10_000_000,
                   help="abort enumeration beyond this many paths per graph")


def _add_arch(p):
    p.add_argument("--arch", choices=["walk", "path", "subtree", "3layer"],
                   default="subtree")
    p.add_argument("--k1", type=int, default=3, help="first-layer path length")
    p.add_argument("--filters", type=int, default=32, help="filters per layer")
    p.add_argument("--sigma", type=float, default=0.6,
                   help="kernel bandwidth (alpha = 1/sigma^2)")
    p.add_argument("--pooling", choices=["sum", "mean", "max"], default="sum")
    p.add_argument("--global-pooling", choices=["sum", "mean", "max"],
                   default=None)
    p.add_argument("--sample-paths", type=int, default=300_000,
                   help="paths sampled per layer for filter learning")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gckn",
        description="Multilayer path-kernel graph embeddings: training, "
                    "cross-validation, exact kernel baselines, interpretation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-unsup", help="learn filters without labels, save the model")
    _add_common(p)
    _add_arch(p)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01,
                   help="classifier regularization for the saved head")

    p = sub.add_parser("fit-sup", help="unsupervised init + end-to-end training")
    _add_common(p)
    _add_arch(p)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0001)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)

    p = sub.add_parser("cv", help="stratified cross-validated evaluation")
    _add_common(p)
    p.add_argument("--arch", choices=["walk", "path", "subtree", "3layer"],
                   default="subtree")
    p.add_argument("--mode", choices=["unsup", "sup"], default="unsup")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--fast", action="store_true",
                   help="reduced desk-scale hyperparameter grid")
    p.add_argument("--sample-paths", type=int, default=300_000)
    p.add_argument("--epochs", type=int, default=50,
                   help="epoch budget per grid point (sup mode)")
    # pin any grid dimension to a single value
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--filters", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--pooling", choices=["sum", "mean", "max"], default=None)

    p = sub.add_parser("embed", help="write embeddings of a dataset under a model")
    _add_common(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("gram", help="exact kernel Gram matrix as CSV")
    _add_common(p)
    p.add_argument("--kernel", choices=["path", "walk", "wl", "k2"], default="wl")
    p.add_argument("--k", type=int, default=3,
                   help="path/walk length or relabeling iterations")

    p = sub.add_parser("interpret", help="path-mask interpretation of one graph")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--graph-index", type=int, default=0)
    p.add_argument("--mu", type=float, default=0.01,
                   help="L1 weight on the path mask")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=250)
    return parser


def _load(args):
    bundle = load_tu_dataset(args.datadir, args.dataset)
    if bundle.encoding.mode == "continuous":
        bundle, _ = standardize_attributes(bundle)
    return bundle


def cmd_fit_unsup(args):
    bundle = _load(args)
    cache = PathCache(cap=args.cap_paths)
    cfg = make_config(args.arch, k1=args.k1, q=args.filters, sigma=args.sigma,
                      pooling=args.pooling, global_pooling=args.global_pooling,
                      one_hot_input=bundle.encoding.mode == "one-hot")
    model = fit_unsupervised(bundle.graphs, cfg, args.seed,
                             n_sample_paths=args.sample_paths, cache=cache,
                             encoding=bundle.encoding)
    x = embed_dataset(bundle.graphs, model, cache=cache)
    clf = train_squared_hinge(x, bundle.graph_labels, lam=args.lam)
    out = os.path.join(args.out, "model.json")
    save_model(model, out, classifier=clf)
    write_manifest(args.out, args, {"model": out})
    print(f"wrote {out}")


def cmd_fit_sup(args):
    bundle = _load(args)
    cache = PathCache(cap=args.cap_paths)
    cfg = make_config(args.arch, k1=args.k1, q=args.filters, sigma=args.sigma,
                      pooling=args.pooling, global_pooling=args.global_pooling,
                      one_hot_input=bundle.encoding.mode == "one-hot")
    init = fit_unsupervised(bundle.graphs, cfg, args.seed,
                            n_sample_paths=args.sample_paths, cache=cache,
                            encoding=bundle.encoding)
    model, clf, log, _ = train_supervised(
        bundle.graphs, bundle.graph_labels, init, lam=args.lam,
        n_epochs=args.epochs, seed=args.seed, batch_size=args.batch_size,
        cache=cache)
    out = os.path.join(args.out, "model.json")
    save_model(model, out, classifier=clf)
    write_training_log(log, os.path.join(args.out, "training-log.csv"))
    write_manifest(args.out, args, {"model": out})
    print(f"wrote {out} (final train acc {log[-1].train_acc:.3f})")


def cmd_cv(args):
    from .plots import save_fold_accuracy_figure

    bundle = _load(args)
    cache = PathCache(cap=args.cap_paths)
    grid = dict(FAST_GRID if args.fast else FULL_GRID)
    for dim, value in (("k1", args.k1), ("q", args.filters),
                       ("sigma", args.sigma), ("pooling", args.pooling)):
        if value is not None:
            grid[dim] = (value,)
    result = cv_evaluate(bundle, args.arch, mode=args.mode, seed=args.seed,
                         n_folds=args.folds, grid=grid,
                         repeats=args.repeats,
                         n_sample_paths=args.sample_paths,
                         sup_epochs=args.epochs, cache=cache,
                         progress=lambda msg: print(msg, file=sys.stderr))
    csv_path = os.path.join(args.out, "results.csv")
    result.write_csv(csv_path)
    fig_path = os.path.join(args.out, "results.png")
    save_fold_accuracy_figure(result, fig_path,
                              title=f"{args.dataset} {args.arch}-{args.mode}")
    write_manifest(args.out, args, {
        "mean_accuracy": result.mean, "std_accuracy": result.std,
    })
    print(f"{args.dataset} {args.arch}-{args.mode}: "
          f"{result.mean:.4f} +/- {result.std:.4f}")
    print(f"wrote {csv_path} and {fig_path}")


def cmd_embed(args):
    from .plots import save_embedding_scatter

    bundle = _load(args)
    cache = PathCache(cap=args.cap_paths)
    model = load_model(args.model)
    x = embed_dataset(bundle.graphs, model, cache=cache)
    from .model import model_forward

    emb0 = model_forward(bundle.graphs[0], model, cache=cache)
    header = ["graph_index", "class"] + [
        f"L{lid}.k{k}.{i:04d}"
        for (lid, k, off, length) in emb0.segments
        for i in range(length)
    ]
    csv_path = os.path.join(args.out, "embeddings.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, row in enumerate(x):
            writer.writerow([i, int(bundle.graph_labels[i])]
                            + [repr(float(v)) for v in row])
    fig_path = os.path.join(args.out, "embeddings.png")
    save_embedding_scatter(x, bundle.graph_labels, fig_path,
                           title=f"{args.dataset} embeddings")
    write_manifest(args.out, args, {"n_graphs": len(bundle.graphs)})
    print(f"wrote {csv_path} and {fig_path}")


def cmd_gram(args):
    from .plots import save_gram_heatmap

    bundle = load_tu_dataset(args.datadir, args.dataset)
    matrix = gram_matrix(bundle.graphs, args.kernel, args.k)
    csv_path = os.path.join(args.out, f"gram-{args.kernel}-k{args.k}.csv")
    write_gram_csv(matrix, csv_path)
    fig_path = os.path.join(args.out, f"gram-{args.kernel}-k{args.k}.png")
    save_gram_heatmap(matrix, fig_path,
                      title=f"{args.dataset} {args.kernel} (k={args.k})")
    write_manifest(args.out, args, {"shape": list(matrix.shape)})
    print(f"wrote {csv_path} and {fig_path}")


def cmd_interpret(args):
    from .plots import save_motif_figure

    bundle = _load(args)
    cache = PathCache(cap=args.cap_paths)
    model = load_model(args.model)
    clf = load_classifier(args.model)
    if clf is None:
        raise GcknError("model file has no classifier; fit with fit-unsup/fit-sup")
    graph = bundle.graphs[args.graph_index]
    mask = optimize_mask(graph, model, clf, mu=args.mu, steps=args.steps,
                         seed=args.seed, cache=cache)
    motif = extract_motif(graph, mask, args.threshold, cache=cache)
    base = os.path.join(args.out, f"motif-{args.graph_index}")
    with open(base + ".txt", "w") as fh:
        fh.write(motif_edge_list_text(motif))
    with open(base + ".dot", "w") as fh:
        fh.write(motif_dot(motif, graph))
    save_motif_figure(graph, motif, base + ".png",
                      title=f"{args.dataset} graph {args.graph_index}")
    write_manifest(args.out, args, {
        "selected_nodes": list(motif.nodes),
        "selected_edges": [list(e) for e in motif.edges],
    })
    print(f"wrote {base}.txt, {base}.dot, {base}.png")


COMMANDS = {
    "fit-unsup": cmd_fit_unsup,
    "fit-sup": cmd_fit_sup,
    "cv": cmd_cv,
    "embed": cmd_embed,
    "gram": cmd_gram,
    "interpret": cmd_interpret,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    try:
        COMMANDS[args.command](args)
    except GcknError as exc:
        print(f"error category={exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error category=io: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
