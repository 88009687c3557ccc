"""Forests: ensembles of trees over weighted bootstrap resamples.

Each tree is fitted on m draws with replacement taken with probabilities
equal to the sample distribution (weighted bootstrap); drawn rows enter the
tree with unit weight. With `bootstrap=False` the distribution is passed
straight into the tree's impurity computation instead (ablation mode).
Prediction is the arithmetic mean of the tree outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .tree import TreeConfig, TreeModel, fit_tree, pack_trees, predict_tree_batch, unpack_trees
from .validation import as_float_matrix, as_label_vector, check_distribution, check_width


@dataclass
class ForestConfig:
    n_trees: int = 100
    tree: TreeConfig = field(default_factory=TreeConfig)
    bootstrap: bool = True
    seed: int = 0
    record_sample_indices: bool = False  # keep per-tree resample rows (tests)

    def validate(self, n_features: int | None = None) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        self.tree.validate(n_features)


@dataclass
class ForestModel:
    trees: list[TreeModel]
    config: ForestConfig
    n_classes: int
    tree_sample_rows: list[np.ndarray] | None = None  # per-tree bootstrap rows

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features


def _tree_seed(forest_seed: int, tree_index: int) -> int:
    # Stable derivation so tree i's stream never depends on scheduling.
    return int(np.random.SeedSequence([forest_seed, tree_index]).generate_state(1)[0])


def _tree_plan(config: ForestConfig, m: int, w: np.ndarray) -> list[tuple[TreeConfig, np.ndarray | None]]:
    """Per-tree (config, bootstrap rows) pairs; rows is None in direct-weight mode."""
    plan = []
    for t in range(config.n_trees):
        tree_cfg = TreeConfig(
            kind=config.tree.kind,
            max_depth=config.tree.max_depth,
            min_samples_leaf=config.tree.min_samples_leaf,
            n_feature_candidates=config.tree.n_feature_candidates,
            seed=_tree_seed(config.seed, t),
        )
        if config.bootstrap:
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, t, 1]))
            plan.append((tree_cfg, rng.choice(m, size=m, replace=True, p=w)))
        else:
            plan.append((tree_cfg, None))
    return plan


def _fit_planned_tree(X, y, w, s, tree_cfg: TreeConfig, rows: np.ndarray | None) -> TreeModel:
    if rows is None:
        return fit_tree(X, y, w * X.shape[0], tree_cfg, n_classes=s)
    return fit_tree(X[rows], y[rows], np.ones(rows.size), tree_cfg, n_classes=s)


def fit_forest(features, labels, sample_weights, config: ForestConfig,
               n_classes: int | None = None, n_jobs: int = 1) -> ForestModel:
    """Fit `n_trees` trees on weighted bootstrap resamples of the data.

    Resample draws and tree seeds derive from (forest seed, tree index), so
    `n_jobs > 1` parallelizes tree fits without changing any output.
    """
    X = as_float_matrix(features)
    y = as_label_vector(labels, X.shape[0], "labels")
    w = check_distribution(sample_weights, X.shape[0])
    config.validate(X.shape[1])
    s = n_classes if n_classes is not None else int(y.max()) + 1
    m = X.shape[0]

    plan = _tree_plan(config, m, w)
    if n_jobs <= 1 or len(plan) <= 1:
        trees = [_fit_planned_tree(X, y, w, s, cfg, rows) for cfg, rows in plan]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [
                pool.submit(_fit_planned_tree, X, y, w, s, cfg, rows)
                for cfg, rows in plan
            ]
            trees = [fut.result() for fut in futures]

    recorded: list[np.ndarray] | None = None
    if config.record_sample_indices:
        recorded = [
            rows if rows is not None else np.flatnonzero(w > 0)
            for _, rows in plan
        ]
    return ForestModel(trees=trees, config=config, n_classes=s, tree_sample_rows=recorded)


def predict_forest_batch(model: ForestModel, X) -> np.ndarray:
    """Mean tree output for every row of X, shape (m, n_classes)."""
    X = as_float_matrix(X)
    check_width(X, model.n_features)
    out = np.zeros((X.shape[0], model.n_classes))
    for tree in model.trees:
        out += predict_tree_batch(tree, X)
    out /= len(model.trees)
    return out


def predict_forest(model: ForestModel, x) -> np.ndarray:
    """Probability vector for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    return predict_forest_batch(model, x.reshape(1, -1))[0]


def pack_forest(model: ForestModel) -> dict[str, np.ndarray]:
    return pack_trees(model.trees)


def unpack_forest(arrays: dict[str, np.ndarray], config: ForestConfig,
                  n_classes: int) -> ForestModel:
    return ForestModel(trees=unpack_trees(arrays), config=config, n_classes=n_classes)
