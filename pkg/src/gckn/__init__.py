"""Graph convolutional kernel networks: multilayer path-kernel embeddings
with exact kernel baselines, unsupervised and end-to-end filter learning,
cross-validated classification, and path-mask interpretation."""

__version__ = "0.1.0"

from .graphs import (
    AttributeEncoding,
    Graph,
    build_graph,
    categorical_labels,
    degrees_as_labels,
    one_hot_encode,
    permute_nodes,
)
from .paths import PathCache, PathTable, enumerate_paths, enumerate_walks
from .exact import (
    exact_k2_dirac,
    exact_path_kernel,
    exact_walk_kernel,
    gram_matrix,
    relaxed_path_kernel,
    wl_relabel,
    wl_subtree_kernel,
)
from .layers import (
    LayerParams,
    NodeFeatureMap,
    inverse_sqrt_gram,
    kernel_eval,
    layer_forward,
    project_path,
    sigma_dot,
    walk_layer_forward_fast,
)
from .model import (
    GcknModel,
    GraphEmbedding,
    LayerConfig,
    ModelConfig,
    OutputSpec,
    concat_multiscale,
    embed_dataset,
    load_classifier,
    load_model,
    make_config,
    model_forward,
    save_model,
)
from .datasets import (
    DatasetBundle,
    FoldSplit,
    load_tu_dataset,
    standardize_attributes,
    stratified_kfold,
)
from .unsup import fit_unsupervised, kmeans_filters, sample_paths
from .svm import LinearClassifier, accuracy, predict, train_squared_hinge
from .sup import model_backward, train_supervised
from .interpret import PathMask, extract_motif, masked_forward, optimize_mask
from .cv import cv_evaluate
