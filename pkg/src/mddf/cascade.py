"""The cascade trainer and predictor.

Training stacks cross-fitted forest blocks layer by layer. Each layer t is
fitted on the raw features concatenated with the running augmented score
vector, using the current sample distribution; the layer's out-of-fold
margins determine its mixture coefficient (minimizing the mean
margin-distribution loss of the cumulative margin) and the next sample
distribution. The augmented vector accumulates additively:

    f_t(x) = alpha_t * h_t([x, f_{t-1}(x)]) + f_{t-1}(x)

and the final decision is the argmax of f_T. Out-of-fold predictions stand
in for h_t on training rows so the augmented features and margins are not
biased by memorization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .block import BlockConfig, ForestBlock, default_forest_configs, fit_block, predict_block_batch
from .dataset import Dataset, SplitSpec, split
from .errors import ConfigError, DataError
from .forest import ForestConfig, ForestModel, fit_forest, predict_forest_batch
from .margin import (
    MarginStats,
    MdLossParams,
    OptimizerConfig,
    margin_stats,
    md_loss,
    multiclass_margin_batch,
    optimize_alpha,
    reweight,
)
from .tree import TreeConfig
from .validation import as_float_matrix, check_width

DEPTH_SCHEDULES = ("2t+2", "4t+4", "8t+8", "16t+16")
CASCADE_MODES = ("full", "same_forests", "stacking_only", "no_preconc")

# Objective decreases smaller than this do not reset early-stopping patience.
MIN_IMPROVEMENT = 1e-7


def schedule_depth(schedule: str, layer: int) -> int:
    """Max tree depth for 1-based layer t under a `ct+c` schedule."""
    if schedule not in DEPTH_SCHEDULES:
        raise ConfigError(f"unknown depth schedule {schedule!r}")
    c = int(schedule.split("t")[0])
    return c * layer + c


@dataclass
class CascadeConfig:
    max_layers: int = 10
    k_folds: int = 5
    n_trees: int = 100
    loss: MdLossParams = field(default_factory=MdLossParams)
    depth_schedule: str = "4t+4"
    mode: str = "full"
    early_stop_patience: int = 2
    validation_fraction: float = 0.0  # 0 = stop on the training objective
    alpha_max: float = 4.0
    report_normalized_alphas: bool = False
    n_jobs: int = 1
    seed: int = 42

    def validate(self) -> None:
        if self.max_layers < 1:
            raise ConfigError(f"max_layers must be >= 1, got {self.max_layers}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.early_stop_patience < 0:
            raise ConfigError("early_stop_patience must be >= 0")
        if not (0.0 <= self.validation_fraction < 1.0):
            raise ConfigError("validation_fraction must be in [0,1)")
        if self.mode not in CASCADE_MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.depth_schedule not in DEPTH_SCHEDULES:
            raise ConfigError(f"unknown depth schedule {self.depth_schedule!r}")
        self.loss.validate()

    def block_config(self, layer: int) -> BlockConfig:
        depth = schedule_depth(self.depth_schedule, layer)
        forests = default_forest_configs(
            n_trees=self.n_trees,
            max_depth=depth,
            same_forests=(self.mode == "same_forests"),
        )
        return BlockConfig(
            k_folds=self.k_folds,
            forests=forests,
            seed=int(np.random.SeedSequence([self.seed, layer]).generate_state(1)[0]),
        )


@dataclass
class CascadeLayer:
    block: ForestBlock
    alpha: float


@dataclass
class CascadeModel:
    layers: list[CascadeLayer]
    n_classes: int
    raw_dim: int
    config: CascadeConfig
    training_report: dict = field(default_factory=dict)
    label_names: list[str] = field(default_factory=list)
    feature_names: list[str] | None = None

    @property
    def n_layers(self) -> int:
        return len(self.layers)


def _layer_inputs(mode: str, X: np.ndarray, f: np.ndarray, layer: int) -> np.ndarray:
    if layer == 1 or mode == "no_preconc":
        return X
    if mode == "stacking_only":
        return f
    return np.hstack([X, f])


def _aggregated_margin_stats(f: np.ndarray, y: np.ndarray, alpha_sum: float) -> MarginStats:
    # Margins of the accumulated score vector, rescaled to simplex range so
    # they stay comparable across layers (lambda itself is scale-invariant).
    scale = alpha_sum if alpha_sum > 0 else 1.0
    return margin_stats(multiclass_margin_batch(f / scale, y))


def train(train_data: Dataset, config: CascadeConfig,
          test_data: Dataset | None = None) -> CascadeModel:
    """Fit a cascade on `train_data` per the layer-by-layer procedure.

    When `test_data` is given its per-layer accuracy and margin statistics
    are tracked in the training report (it plays no role in fitting or
    stopping). A positive `validation_fraction` carves a stratified holdout
    out of the training data and switches early stopping from the training
    objective to holdout accuracy.
    """
    config.validate()
    train_data.validate()
    if test_data is not None and test_data.n_features != train_data.n_features:
        raise DataError(
            f"test data has {test_data.n_features} features, train has {train_data.n_features}"
        )

    fit_set = train_data
    val_set: Dataset | None = None
    if config.validation_fraction > 0.0:
        fit_set, val_set = split(
            train_data,
            SplitSpec("stratified_holdout", config.validation_fraction, config.seed),
        )

    X = fit_set.features
    y = fit_set.labels
    m, n = X.shape
    s = fit_set.n_classes
    if config.k_folds > m:
        raise ConfigError(f"k_folds={config.k_folds} exceeds m={m}")

    weights = np.full(m, 1.0 / m)
    cumulative = np.zeros(m)
    f_train = np.zeros((m, s))
    f_val = np.zeros((val_set.n_samples, s)) if val_set is not None else None
    f_test = np.zeros((test_data.n_samples, s)) if test_data is not None else None
    opt_cfg = OptimizerConfig(alpha_max=config.alpha_max)

    layers: list[CascadeLayer] = []
    layer_rows: list[dict] = []
    # Best-so-far for early stopping: training objective (lower is better)
    # or holdout accuracy (higher is better).
    use_validation = val_set is not None
    best_metric = -np.inf if use_validation else np.inf
    best_layer = 0
    bad = 0
    halted = ""

    for t in range(1, config.max_layers + 1):
        t0 = time.perf_counter()
        inputs = _layer_inputs(config.mode, X, f_train, t)
        block, oof = fit_block(
            inputs, y, weights, config.block_config(t), n_classes=s, n_jobs=config.n_jobs
        )
        gamma_t = multiclass_margin_batch(oof, y)
        alpha = optimize_alpha(cumulative, gamma_t, config.loss, opt_cfg)
        cumulative = cumulative + alpha * gamma_t
        f_train = alpha * oof + f_train
        weights = reweight(cumulative, config.loss)
        objective = float(md_loss(cumulative, config.loss).mean())
        layers.append(CascadeLayer(block=block, alpha=alpha))

        alpha_sum = sum(layer.alpha for layer in layers)
        train_pred = f_train.argmax(axis=1)
        row = {
            "layer": t,
            "alpha": alpha,
            "objective": objective,
            "max_tree_depth": schedule_depth(config.depth_schedule, t),
            "train_accuracy": float((train_pred == y).mean()),
            "margin_cumulative_train": margin_stats(cumulative).to_dict(),
            "margin_prediction_train": _aggregated_margin_stats(f_train, y, alpha_sum).to_dict(),
        }

        if val_set is not None:
            val_inputs = _layer_inputs(config.mode, val_set.features, f_val, t)
            f_val = alpha * predict_block_batch(block, val_inputs) + f_val
            row["validation_accuracy"] = float(
                (f_val.argmax(axis=1) == val_set.labels).mean()
            )
        if test_data is not None:
            test_inputs = _layer_inputs(config.mode, test_data.features, f_test, t)
            f_test = alpha * predict_block_batch(block, test_inputs) + f_test
            row["test_accuracy"] = float((f_test.argmax(axis=1) == test_data.labels).mean())
            row["margin_prediction_test"] = _aggregated_margin_stats(
                f_test, test_data.labels, alpha_sum
            ).to_dict()

        row["wall_time_ms"] = (time.perf_counter() - t0) * 1000.0
        layer_rows.append(row)

        metric = row["validation_accuracy"] if use_validation else objective
        improved = (
            metric > best_metric + MIN_IMPROVEMENT
            if use_validation
            else metric < best_metric - MIN_IMPROVEMENT
        )
        if improved:
            best_metric = metric
            best_layer = t
            bad = 0
        else:
            bad += 1
            # patience = 0 disables early stopping (always train to max_layers)
            if config.early_stop_patience > 0 and bad >= config.early_stop_patience:
                halted = f"no improvement for {bad} layer(s)"
                break
        if alpha == 0.0:
            halted = f"layer {t} earned zero weight"
            break

    best_layer = max(best_layer, 1)

    kept = layers[:best_layer]
    kept_rows = layer_rows[:best_layer]
    if config.report_normalized_alphas:
        total = sum(layer.alpha for layer in kept)
        for row_ in kept_rows:
            row_["alpha_normalized"] = row_["alpha"] / total if total > 0 else 0.0

    report = {
        "per_layer": kept_rows,
        "layers_trained": len(layers),
        "layers_kept": best_layer,
        "stop_reason": halted or "reached max_layers",
        "final_train_accuracy": kept_rows[-1]["train_accuracy"],
        "final_objective": kept_rows[-1]["objective"],
    }
    if "validation_accuracy" in kept_rows[-1]:
        report["final_validation_accuracy"] = kept_rows[-1]["validation_accuracy"]
    if "test_accuracy" in kept_rows[-1]:
        report["final_test_accuracy"] = kept_rows[-1]["test_accuracy"]

    return CascadeModel(
        layers=kept,
        n_classes=s,
        raw_dim=n,
        config=config,
        training_report=report,
        label_names=list(train_data.label_names),
        feature_names=train_data.feature_names,
    )


def predict_scores_batch(model: CascadeModel, X) -> np.ndarray:
    """Accumulated score vectors f_T for every row of X, shape (m, s)."""
    X = as_float_matrix(X)
    check_width(X, model.raw_dim)
    f = np.zeros((X.shape[0], model.n_classes))
    for t, layer in enumerate(model.layers, start=1):
        inputs = _layer_inputs(model.config.mode, X, f, t)
        f = layer.alpha * predict_block_batch(layer.block, inputs) + f
    return f


def predict_scores(model: CascadeModel, x) -> np.ndarray:
    """Score vector for a single input."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("predict_scores expects a single 1-D input")
    return predict_scores_batch(model, x.reshape(1, -1))[0]


def predict_batch(model: CascadeModel, X) -> np.ndarray:
    """Class index per row: argmax of the scores, ties to the lowest index."""
    return predict_scores_batch(model, X).argmax(axis=1)


def predict(model: CascadeModel, x) -> int:
    return int(predict_scores(model, x).argmax())


def evaluate_prefixes(model: CascadeModel, X, labels) -> list[dict]:
    """Accuracy and margin statistics of every layer prefix (layers 1..t).

    Returns one record per layer with the prefix accuracy, statistics of the
    cumulative weighted margins, and statistics of the aggregated-prediction
    margins (scores rescaled by the coefficient total).
    """
    X = as_float_matrix(X)
    check_width(X, model.raw_dim)
    labels = np.asarray(labels, dtype=np.int64)
    f = np.zeros((X.shape[0], model.n_classes))
    cumulative = np.zeros(X.shape[0])
    alpha_sum = 0.0
    rows = []
    for t, layer in enumerate(model.layers, start=1):
        inputs = _layer_inputs(model.config.mode, X, f, t)
        h = predict_block_batch(layer.block, inputs)
        f = layer.alpha * h + f
        cumulative = cumulative + layer.alpha * multiclass_margin_batch(h, labels)
        alpha_sum += layer.alpha
        rows.append({
            "layer": t,
            "accuracy": float((f.argmax(axis=1) == labels).mean()),
            "margin_cumulative": margin_stats(cumulative).to_dict(),
            "margin_prediction": _aggregated_margin_stats(f, labels, alpha_sum).to_dict(),
        })
    return rows


def layer_representations(model: CascadeModel, X) -> list[np.ndarray]:
    """Per-layer concatenated representation [x, f_t(x)], one matrix per layer."""
    X = as_float_matrix(X)
    check_width(X, model.raw_dim)
    f = np.zeros((X.shape[0], model.n_classes))
    out = []
    for t, layer in enumerate(model.layers, start=1):
        inputs = _layer_inputs(model.config.mode, X, f, t)
        f = layer.alpha * predict_block_batch(layer.block, inputs) + f
        out.append(np.hstack([X, f]))
    return out


@dataclass
class BaselineForest:
    """Single weighted random forest trained on all rows; the shallow
    reference the cascade is compared against."""

    forest: ForestModel
    n_classes: int
    raw_dim: int
    label_names: list[str] = field(default_factory=list)
    feature_names: list[str] | None = None
    training_report: dict = field(default_factory=dict)


def train_baseline_forest(train_data: Dataset, n_trees: int, max_depth: int = 30,
                          seed: int = 42, n_jobs: int = 1) -> BaselineForest:
    train_data.validate()
    m = train_data.n_samples
    config = ForestConfig(
        n_trees=n_trees,
        tree=TreeConfig(kind="random_subset", max_depth=max_depth),
        seed=seed,
    )
    forest = fit_forest(
        train_data.features,
        train_data.labels,
        np.full(m, 1.0 / m),
        config,
        n_classes=train_data.n_classes,
        n_jobs=n_jobs,
    )
    scores = predict_forest_batch(forest, train_data.features)
    report = {
        "kind": "baseline_rf",
        "n_trees": n_trees,
        "train_accuracy": float((scores.argmax(axis=1) == train_data.labels).mean()),
    }
    return BaselineForest(
        forest=forest,
        n_classes=train_data.n_classes,
        raw_dim=train_data.n_features,
        label_names=list(train_data.label_names),
        feature_names=train_data.feature_names,
        training_report=report,
    )
