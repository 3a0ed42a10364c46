"""Node embeddings for attributed graphs: graph-filter smoothing followed by
mini-batch deep metric learning, with clustering / classification / link
prediction evaluation and empirical checks of the loss-gap bounds."""

from .graph import AttributedGraph, GraphValidationError, gen_synthetic, load_graph, write_graph
from .gprfilter import (FilterConfig, SmoothedFeatures, gpr_weights, hop_operator,
                        propagate_exact, propagate_push)
from .encoder import EncoderParams, TrainingError, encode, init_encoder
from .losses import dmat_i_objective, dmat_loss, dmt_loss, unbiased_reference_loss
from .augment import AugmentConfig, mask_columns
from .train import EmbeddingMatrix, TrainConfig, TrainResult, embed_all, train
from .evaluate import (clustering_metrics, fit_linear_classifier, kmeans,
                       link_prediction_eval, split_edges, write_metrics_report)
from .theory import (SyntheticTupletSource, loss_gap_check, evaluate_bound,
                     hardness_histogram, tau0_estimate, concentration_bound, scaling_constants)
from .presets import PRESETS, get_preset, preset_names

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph", "GraphValidationError", "gen_synthetic", "load_graph", "write_graph",
    "FilterConfig", "SmoothedFeatures", "gpr_weights", "hop_operator",
    "propagate_exact", "propagate_push",
    "EncoderParams", "TrainingError", "encode", "init_encoder",
    "dmat_i_objective", "dmat_loss", "dmt_loss", "unbiased_reference_loss",
    "AugmentConfig", "mask_columns",
    "EmbeddingMatrix", "TrainConfig", "TrainResult", "embed_all", "train",
    "clustering_metrics", "fit_linear_classifier", "kmeans",
    "link_prediction_eval", "split_edges", "write_metrics_report",
    "SyntheticTupletSource", "loss_gap_check", "evaluate_bound",
    "hardness_histogram", "tau0_estimate", "concentration_bound", "scaling_constants",
    "PRESETS", "get_preset", "preset_names",
    "__version__",
]
