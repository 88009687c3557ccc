"""Margin-distribution deep forest (mdDF).

A cascade of k-fold cross-fitted forest blocks whose outputs accumulate into
an additive score vector; per-layer mixture coefficients minimize a
margin-distribution loss and the same loss reweights the training samples
each layer.
"""

from .block import BlockConfig, ForestBlock, fit_block, predict_block, predict_block_batch
from .cascade import (
    BaselineForest,
    CascadeConfig,
    CascadeModel,
    evaluate_prefixes,
    layer_representations,
    predict,
    predict_batch,
    predict_scores,
    predict_scores_batch,
    train,
    train_baseline_forest,
)
from .dataset import Dataset, SplitSpec, parse_csv, parse_libsvm, split, write_csv
from .errors import ConfigError, DataError, DimensionError, MddfError, ModelFormatError
from .estimator import MddfClassifier
from .forest import ForestConfig, ForestModel, fit_forest, predict_forest, predict_forest_batch
from .margin import (
    MarginStats,
    MdLossParams,
    OptimizerConfig,
    margin_stats,
    md_loss,
    md_loss_grad,
    multiclass_margin,
    multiclass_margin_batch,
    optimize_alpha,
    reweight,
)
from .model_io import load, save
from .tree import TreeConfig, TreeModel, fit_tree, predict_tree, predict_tree_batch

__version__ = "0.1.0"

__all__ = [
    "BaselineForest",
    "BlockConfig",
    "CascadeConfig",
    "CascadeModel",
    "ConfigError",
    "DataError",
    "Dataset",
    "DimensionError",
    "evaluate_prefixes",
    "ForestBlock",
    "ForestConfig",
    "ForestModel",
    "MarginStats",
    "MddfClassifier",
    "MddfError",
    "MdLossParams",
    "ModelFormatError",
    "OptimizerConfig",
    "SplitSpec",
    "TreeConfig",
    "TreeModel",
    "fit_block",
    "fit_forest",
    "fit_tree",
    "layer_representations",
    "load",
    "margin_stats",
    "md_loss",
    "md_loss_grad",
    "multiclass_margin",
    "multiclass_margin_batch",
    "optimize_alpha",
    "parse_csv",
    "parse_libsvm",
    "predict",
    "predict_batch",
    "predict_block",
    "predict_block_batch",
    "predict_forest",
    "predict_forest_batch",
    "predict_scores",
    "predict_scores_batch",
    "predict_tree",
    "predict_tree_batch",
    "reweight",
    "save",
    "split",
    "train",
    "train_baseline_forest",
    "write_csv",
]
