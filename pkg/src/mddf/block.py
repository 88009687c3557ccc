"""Layer-level learner: a k-fold cross-fitted collection of forests.

Training rows are divided into k folds; for each fold i every configured
forest is fitted on the complement (weights renormalized over it). A training
row is then scored only by the forests that never saw it (out-of-fold), while
unseen inputs are scored by the mean over all k x n_forests models.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .forest import (
    ForestConfig,
    ForestModel,
    fit_forest,
    pack_forest,
    predict_forest_batch,
    unpack_forest,
)
from .tree import TreeConfig
from .validation import as_float_matrix, as_label_vector, check_distribution, check_width


def default_forest_configs(n_trees: int = 100, max_depth: int = 8,
                           same_forests: bool = False) -> list[ForestConfig]:
    """Standard block composition: 2 random-subset + 2 completely-random
    forests (or 4 random-subset when `same_forests`)."""
    kinds = ["random_subset"] * 4 if same_forests else [
        "random_subset", "random_subset", "completely_random", "completely_random",
    ]
    return [
        ForestConfig(n_trees=n_trees, tree=TreeConfig(kind=kind, max_depth=max_depth))
        for kind in kinds
    ]


@dataclass
class BlockConfig:
    k_folds: int = 5
    forests: list[ForestConfig] = field(default_factory=default_forest_configs)
    seed: int = 0
    stratify_folds: bool = False
    per_forest_concat: bool = False  # concat per-forest vectors instead of averaging

    def validate(self) -> None:
        if self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if not self.forests:
            raise ConfigError("block needs at least one forest")
        for fc in self.forests:
            fc.validate()


@dataclass
class ForestBlock:
    fold_models: list[list[ForestModel]]  # [fold][forest], trained on the complement
    fold_assignment: np.ndarray  # (m,) fold index per training row
    input_dim: int
    n_classes: int
    config: BlockConfig
    fold_train_rows: list[np.ndarray] | None = None  # complement rows per fold

    @property
    def k_folds(self) -> int:
        return len(self.fold_models)

    @property
    def n_forests(self) -> int:
        return len(self.fold_models[0])

    @property
    def output_dim(self) -> int:
        if self.config.per_forest_concat:
            return self.n_forests * self.n_classes
        return self.n_classes


def forest_seed(block_seed: int, fold: int, forest_index: int) -> int:
    """Per-(fold, forest) seed; a documented convention so fits are
    order-stable under any scheduling."""
    return int(np.random.SeedSequence([block_seed, fold, forest_index]).generate_state(1)[0])


def _assign_folds(labels: np.ndarray, k: int, rng: np.random.Generator,
                  stratify: bool) -> np.ndarray:
    m = labels.shape[0]
    assignment = np.empty(m, dtype=np.int32)
    if stratify:
        # rotate the starting fold per class so remainders spread out
        for offset, c in enumerate(np.unique(labels)):
            members = rng.permutation(np.flatnonzero(labels == c))
            assignment[members] = (np.arange(members.size) + offset) % k
    else:
        perm = rng.permutation(m)
        sizes = np.full(k, m // k, dtype=np.int64)
        sizes[: m % k] += 1
        start = 0
        for i, size in enumerate(sizes):
            assignment[perm[start:start + size]] = i
            start += size
    return assignment


def _renormalized(weights: np.ndarray, rows: np.ndarray) -> np.ndarray:
    sub = weights[rows]
    total = sub.sum()
    if total <= 0:
        # All mass sits inside the held-out fold; fall back to uniform so the
        # complement forests still resample a proper distribution.
        return np.full(rows.size, 1.0 / rows.size)
    return sub / total


def fit_block(inputs, labels, sample_weights, config: BlockConfig,
              n_classes: int | None = None, n_jobs: int = 1
              ) -> tuple[ForestBlock, np.ndarray]:
    """Cross-fit the block; returns (block, out-of-fold prediction matrix).

    Row j of the out-of-fold matrix is produced exclusively by the models
    trained without fold(j). With `per_forest_concat` the per-forest vectors
    are concatenated instead of averaged.
    """
    X = as_float_matrix(inputs)
    y = as_label_vector(labels, X.shape[0], "labels")
    w = check_distribution(sample_weights, X.shape[0])
    config.validate()
    m = X.shape[0]
    if config.k_folds > m:
        raise ConfigError(f"k_folds={config.k_folds} exceeds m={m}")
    s = n_classes if n_classes is not None else int(y.max()) + 1

    rng = np.random.default_rng(config.seed)
    assignment = _assign_folds(y, config.k_folds, rng, config.stratify_folds)

    jobs = []
    fold_rows = []
    for i in range(config.k_folds):
        train_rows = np.flatnonzero(assignment != i)
        fold_rows.append(train_rows)
        if np.unique(y[train_rows]).size < 2:
            warnings.warn(
                f"fold {i} complement contains a single class; its trees collapse to leaves",
                stacklevel=2,
            )
        fold_w = _renormalized(w, train_rows)
        for q, fc in enumerate(config.forests):
            cfg = ForestConfig(
                n_trees=fc.n_trees,
                tree=fc.tree,
                bootstrap=fc.bootstrap,
                seed=forest_seed(config.seed, i, q),
                record_sample_indices=fc.record_sample_indices,
            )
            jobs.append((i, q, train_rows, fold_w, cfg))

    fitted = _run_fits(X, y, s, jobs, n_jobs)
    n_forests = len(config.forests)
    fold_models: list[list[ForestModel]] = [
        [fitted[(i, q)] for q in range(n_forests)] for i in range(config.k_folds)
    ]

    width = n_forests * s if config.per_forest_concat else s
    oof = np.zeros((m, width))
    for i in range(config.k_folds):
        held = np.flatnonzero(assignment == i)
        if held.size == 0:
            continue
        per_forest = [predict_forest_batch(fold_models[i][q], X[held]) for q in range(n_forests)]
        if config.per_forest_concat:
            oof[held] = np.hstack(per_forest)
        else:
            oof[held] = np.mean(per_forest, axis=0)

    block = ForestBlock(
        fold_models=fold_models,
        fold_assignment=assignment,
        input_dim=X.shape[1],
        n_classes=s,
        config=config,
        fold_train_rows=fold_rows,
    )
    return block, oof


def _run_fits(X, y, s, jobs, n_jobs):
    if n_jobs <= 1 or len(jobs) <= 1:
        return {
            (i, q): fit_forest(X[rows], y[rows], fw, cfg, n_classes=s)
            for i, q, rows, fw, cfg in jobs
        }
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        futures = {
            (i, q): pool.submit(fit_forest, X[rows], y[rows], fw, cfg, n_classes=s)
            for i, q, rows, fw, cfg in jobs
        }
        return {key: fut.result() for key, fut in futures.items()}


def predict_block_batch(block: ForestBlock, X) -> np.ndarray:
    """Mean over all k x n_forests models (per-forest fold means when
    concatenating), shape (m, output_dim)."""
    X = as_float_matrix(X)
    check_width(X, block.input_dim)
    if block.config.per_forest_concat:
        parts = []
        for q in range(block.n_forests):
            acc = np.zeros((X.shape[0], block.n_classes))
            for i in range(block.k_folds):
                acc += predict_forest_batch(block.fold_models[i][q], X)
            parts.append(acc / block.k_folds)
        return np.hstack(parts)
    out = np.zeros((X.shape[0], block.n_classes))
    for row in block.fold_models:
        for model in row:
            out += predict_forest_batch(model, X)
    out /= block.k_folds * block.n_forests
    return out


def predict_block(block: ForestBlock, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("predict_block expects a single 1-D input")
    return predict_block_batch(block, x.reshape(1, -1))[0]


def pack_block(block: ForestBlock) -> tuple[dict, dict[str, np.ndarray]]:
    """Split a block into JSON-able metadata and flat arrays."""
    arrays: dict[str, np.ndarray] = {"fold_assignment": block.fold_assignment}
    for i, row in enumerate(block.fold_models):
        for q, model in enumerate(row):
            for key, arr in pack_forest(model).items():
                arrays[f"f{i}.q{q}.{key}"] = arr
    meta = {
        "input_dim": block.input_dim,
        "n_classes": block.n_classes,
        "k_folds": block.k_folds,
        "n_forests": block.n_forests,
    }
    return meta, arrays


def unpack_block(meta: dict, arrays: dict[str, np.ndarray], config: BlockConfig) -> ForestBlock:
    fold_models = []
    for i in range(meta["k_folds"]):
        row = []
        for q in range(meta["n_forests"]):
            prefix = f"f{i}.q{q}."
            sub = {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
            row.append(unpack_forest(sub, config.forests[q], meta["n_classes"]))
        fold_models.append(row)
    return ForestBlock(
        fold_models=fold_models,
        fold_assignment=np.asarray(arrays["fold_assignment"], dtype=np.int32),
        input_dim=meta["input_dim"],
        n_classes=meta["n_classes"],
        config=config,
        fold_train_rows=None,
    )
