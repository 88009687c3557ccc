"""Single decision trees over dense float features.

Two kinds are supported: `random_subset` trees evaluate a random draw of
candidate features at each node and take the (feature, threshold) pair with
the lowest weighted Gini impurity; `completely_random` trees pick one
non-constant feature uniformly and a threshold uniformly between its min and
max over the node's samples. Leaves hold weight-normalized class histograms.

Nodes are stored in preorder as parallel arrays; `node_feature` is -1 for
leaves. Routing sends `x[feature] <= threshold` to the left child. Fitting is
fully deterministic given (data, weights, config): the RNG is consumed in
preorder node order, equal-impurity splits break to the lowest feature index
and then the smallest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .validation import as_float_matrix, as_label_vector, as_weight_vector, check_width

TREE_KINDS = ("random_subset", "completely_random")

# Two float impurities within this tolerance count as tied, so tie-breaking
# (not rounding noise) decides between them.
IMPURITY_TIE_TOL = 1e-12


@dataclass
class TreeConfig:
    kind: str = "random_subset"
    max_depth: int = 8
    min_samples_leaf: int = 1
    n_feature_candidates: int | None = None  # random_subset only; None = sqrt(n)
    seed: int = 0

    def validate(self, n_features: int | None = None) -> None:
        if self.kind not in TREE_KINDS:
            raise ConfigError(f"unknown tree kind {self.kind!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.n_feature_candidates is not None and self.n_feature_candidates < 1:
            raise ConfigError("n_feature_candidates must be >= 1")
        if (
            n_features is not None
            and self.n_feature_candidates is not None
            and self.n_feature_candidates > n_features
        ):
            raise ConfigError(
                f"n_feature_candidates={self.n_feature_candidates} exceeds n={n_features}"
            )

    def resolved_candidates(self, n_features: int) -> int:
        if self.n_feature_candidates is not None:
            return self.n_feature_candidates
        return max(1, int(round(np.sqrt(n_features))))


@dataclass
class TreeModel:
    """Fitted tree as preorder parallel arrays.

    node_feature[i] >= 0 marks an internal node; leaves have -1 and a row of
    `leaf_distribution` summing to 1. `node_n_samples` is the training weight
    mass that reached the node.
    """

    node_feature: np.ndarray  # (n_nodes,) int32, -1 for leaves
    node_threshold: np.ndarray  # (n_nodes,) float64, NaN for leaves
    children_left: np.ndarray  # (n_nodes,) int32, -1 for leaves
    children_right: np.ndarray  # (n_nodes,) int32, -1 for leaves
    leaf_distribution: np.ndarray  # (n_nodes, s) float64
    node_n_samples: np.ndarray  # (n_nodes,) float64 weight mass
    n_features: int
    n_classes: int

    @property
    def n_nodes(self) -> int:
        return self.node_feature.shape[0]

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int32)
        for i in range(self.n_nodes):
            for child in (self.children_left[i], self.children_right[i]):
                if child >= 0:
                    depths[child] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0


def _midpoint(a: float, b: float) -> float:
    # (a+b)/2 can round up to b for adjacent floats, which would route every
    # sample left; fall back to a, which realizes the same partition exactly.
    mid = (a + b) / 2.0
    return a if mid >= b else mid


class _TreeBuilder:
    def __init__(self, X: np.ndarray, y: np.ndarray, w: np.ndarray, config: TreeConfig,
                 n_classes: int):
        self.X = X
        self.y = y
        self.w = w
        self.config = config
        self.n_classes = n_classes
        self.rng = np.random.default_rng(config.seed)
        self.n_candidates = config.resolved_candidates(X.shape[1])
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.dist: list[np.ndarray] = []
        self.mass: list[float] = []

    def build(self) -> TreeModel:
        # Explicit stack in (node, right-subtree-last) order keeps the node
        # layout and RNG stream in preorder regardless of tree shape.
        stack: list[tuple[np.ndarray, int, int, bool]] = [
            (np.arange(self.X.shape[0]), 0, -1, False)
        ]
        while stack:
            idx, depth, parent, is_right = stack.pop()
            node_id = self._emit_placeholder()
            if parent >= 0:
                if is_right:
                    self.right[parent] = node_id
                else:
                    self.left[parent] = node_id
            split = self._find_split(idx, depth)
            if split is None:
                self._fill_leaf(node_id, idx)
                continue
            f, thr = split
            go_left = self.X[idx, f] <= thr
            self.feature[node_id] = f
            self.threshold[node_id] = thr
            self.dist[node_id] = self._class_mass(idx) / self.w[idx].sum()
            self.mass[node_id] = float(self.w[idx].sum())
            # Push right first so the left child is emitted next (preorder).
            stack.append((idx[~go_left], depth + 1, node_id, True))
            stack.append((idx[go_left], depth + 1, node_id, False))

        s = self.n_classes
        return TreeModel(
            node_feature=np.asarray(self.feature, dtype=np.int32),
            node_threshold=np.asarray(self.threshold, dtype=np.float64),
            children_left=np.asarray(self.left, dtype=np.int32),
            children_right=np.asarray(self.right, dtype=np.int32),
            leaf_distribution=np.vstack(self.dist).reshape(-1, s),
            node_n_samples=np.asarray(self.mass, dtype=np.float64),
            n_features=self.X.shape[1],
            n_classes=s,
        )

    def _emit_placeholder(self) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.dist.append(np.zeros(self.n_classes))
        self.mass.append(0.0)
        return len(self.feature) - 1

    def _class_mass(self, idx: np.ndarray) -> np.ndarray:
        return np.bincount(self.y[idx], weights=self.w[idx], minlength=self.n_classes)

    def _fill_leaf(self, node_id: int, idx: np.ndarray) -> None:
        mass = self._class_mass(idx)
        self.dist[node_id] = mass / mass.sum()
        self.mass[node_id] = float(mass.sum())

    def _find_split(self, idx: np.ndarray, depth: int):
        cfg = self.config
        if depth >= cfg.max_depth or idx.size < 2 * cfg.min_samples_leaf:
            return None
        mass = self._class_mass(idx)
        if np.count_nonzero(mass > 0) <= 1:
            return None  # pure node
        if cfg.kind == "random_subset":
            return self._best_gini_split(idx)
        return self._uniform_split(idx)

    def _best_gini_split(self, idx: np.ndarray):
        candidates = np.sort(
            self.rng.choice(self.X.shape[1], size=self.n_candidates, replace=False)
        )
        msl = self.config.min_samples_leaf
        w_node = self.w[idx]
        y_node = self.y[idx]
        best_imp = np.inf
        best: tuple[int, float] | None = None
        for f in candidates:
            v = self.X[idx, f]
            order = np.argsort(v, kind="stable")
            vs = v[order]
            if vs[0] == vs[-1]:
                continue
            onehot = np.zeros((idx.size, self.n_classes))
            onehot[np.arange(idx.size), y_node[order]] = w_node[order]
            cum = np.cumsum(onehot, axis=0)
            total = cum[-1]
            w_total = total.sum()
            cut = np.flatnonzero(vs[:-1] < vs[1:])  # split after position p
            if msl > 1:
                n_left = cut + 1
                cut = cut[(n_left >= msl) & (idx.size - n_left >= msl)]
            if cut.size == 0:
                continue
            left = cum[cut]
            right = total - left
            wl = left.sum(axis=1)
            wr = w_total - wl
            # (WL*gini_L + WR*gini_R) / W  ==  (WL - sum L^2/WL + WR - sum R^2/WR) / W
            imp = (wl - (left**2).sum(axis=1) / wl + wr - (right**2).sum(axis=1) / wr) / w_total
            lo = imp.min()
            first = cut[np.flatnonzero(imp <= lo + IMPURITY_TIE_TOL)[0]]
            if lo < best_imp - IMPURITY_TIE_TOL:
                best_imp = lo
                best = (int(f), _midpoint(float(vs[first]), float(vs[first + 1])))
        return best

    def _uniform_split(self, idx: np.ndarray):
        msl = self.config.min_samples_leaf
        for f in self.rng.permutation(self.X.shape[1]):
            v = self.X[idx, f]
            lo, hi = v.min(), v.max()
            if lo == hi:
                continue
            thr = float(self.rng.uniform(lo, hi))
            n_left = int((v <= thr).sum())
            if n_left < msl or idx.size - n_left < msl:
                return None  # random cut violates the leaf minimum; stop here
            return int(f), thr
        return None  # every feature constant over this node


def fit_tree(features, labels, sample_weights, config: TreeConfig,
             n_classes: int | None = None) -> TreeModel:
    """Fit one decision tree on weighted samples.

    Zero-weight samples are dropped up front so they cannot influence split
    statistics, threshold candidates, or leaf histograms.
    """
    X = as_float_matrix(features)
    y = as_label_vector(labels, X.shape[0], "labels")
    w = as_weight_vector(sample_weights, X.shape[0])
    config.validate(X.shape[1])
    if w.sum() <= 0:
        raise DataError("sample_weights sum to zero; nothing to fit")
    s = n_classes if n_classes is not None else int(y.max()) + 1
    if y.max() >= s:
        raise DataError(f"label {y.max()} out of range for n_classes={s}")

    live = w > 0
    return _TreeBuilder(X[live], y[live], w[live], config, s).build()


def predict_tree_batch(model: TreeModel, X) -> np.ndarray:
    """Leaf distribution for every row of X, shape (m, n_classes)."""
    X = as_float_matrix(X)
    check_width(X, model.n_features)
    node = np.zeros(X.shape[0], dtype=np.int32)
    pending = np.flatnonzero(model.node_feature[node] >= 0)
    while pending.size:
        at = node[pending]
        f = model.node_feature[at]
        go_left = X[pending, f] <= model.node_threshold[at]
        node[pending] = np.where(go_left, model.children_left[at], model.children_right[at])
        pending = pending[model.node_feature[node[pending]] >= 0]
    return model.leaf_distribution[node]


def predict_tree(model: TreeModel, x) -> np.ndarray:
    """Probability vector for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("predict_tree expects a single 1-D input")
    return predict_tree_batch(model, x.reshape(1, -1))[0]


def pack_trees(trees: list[TreeModel]) -> dict[str, np.ndarray]:
    """Stack a list of trees into flat arrays for serialization."""
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    for i, t in enumerate(trees):
        offsets[i + 1] = offsets[i] + t.n_nodes
    return {
        "offsets": offsets,
        "feature": np.concatenate([t.node_feature for t in trees]),
        "threshold": np.concatenate([t.node_threshold for t in trees]),
        "left": np.concatenate([t.children_left for t in trees]),
        "right": np.concatenate([t.children_right for t in trees]),
        "dist": np.concatenate([t.leaf_distribution for t in trees], axis=0),
        "mass": np.concatenate([t.node_n_samples for t in trees]),
        "meta": np.asarray([trees[0].n_features, trees[0].n_classes], dtype=np.int64),
    }


def unpack_trees(arrays: dict[str, np.ndarray]) -> list[TreeModel]:
    offsets = arrays["offsets"]
    n_features, n_classes = (int(v) for v in arrays["meta"])
    trees = []
    for i in range(offsets.shape[0] - 1):
        a, b = int(offsets[i]), int(offsets[i + 1])
        trees.append(
            TreeModel(
                node_feature=arrays["feature"][a:b].astype(np.int32),
                node_threshold=arrays["threshold"][a:b].astype(np.float64),
                children_left=arrays["left"][a:b].astype(np.int32),
                children_right=arrays["right"][a:b].astype(np.int32),
                leaf_distribution=arrays["dist"][a:b].astype(np.float64),
                node_n_samples=arrays["mass"][a:b].astype(np.float64),
                n_features=n_features,
                n_classes=n_classes,
            )
        )
    return trees
