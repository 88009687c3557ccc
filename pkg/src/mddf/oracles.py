"""Brute-force reference implementations used to cross-check the fast paths.

These deliberately avoid the library's own split search, optimizer, and
gradient code: the split oracle enumerates every (feature, midpoint) pair
directly, the coefficient oracle scans a dense grid, and derivatives come
from central finite differences. They are slow and only meant for tiny
inputs; `self_check` wires a handful of cases together for the CLI.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .margin import MdLossParams, md_loss

IMPURITY_TIE_TOL = 1e-12  # same tie rule the tree module commits to


def gini_of(weighted_counts: np.ndarray) -> float:
    total = weighted_counts.sum()
    if total <= 0:
        return 0.0
    frac = weighted_counts / total
    return float(1.0 - (frac * frac).sum())


def exhaustive_split(features, labels, weights):
    """Best (feature, threshold, impurity) by direct enumeration.

    Tries every feature and every midpoint between consecutive distinct
    values, computing the children's weighted Gini by masking. Ties resolve
    to the lowest feature index, then the smallest threshold. Returns None
    when no feature admits a split.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    keep = w > 0
    X, y, w = X[keep], y[keep], w[keep]
    n_classes = int(y.max()) + 1
    total_w = w.sum()

    best = None
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for a, b in zip(values[:-1], values[1:]):
            thr = (a + b) / 2.0
            if thr >= b:  # adjacent floats: midpoint rounded up, use a
                thr = a
            left = X[:, f] <= thr
            wl = np.bincount(y[left], weights=w[left], minlength=n_classes)
            wr = np.bincount(y[~left], weights=w[~left], minlength=n_classes)
            imp = (wl.sum() * gini_of(wl) + wr.sum() * gini_of(wr)) / total_w
            if best is None or imp < best[2] - IMPURITY_TIE_TOL:
                best = (f, thr, imp)
    return best


def grid_alpha(prev, margins, params: MdLossParams, resolution: float = 1e-4,
               alpha_max: float = 4.0) -> tuple[float, float]:
    """Dense scan of the mean loss over [0, alpha_max]; returns (alpha, objective)."""
    prev = np.asarray(prev, dtype=np.float64)
    margins = np.asarray(margins, dtype=np.float64)
    n_steps = int(round(alpha_max / resolution))
    grid = np.linspace(0.0, alpha_max, n_steps + 1)  # endpoints inclusive
    z = prev[None, :] + grid[:, None] * margins[None, :]
    objective = md_loss(z, params).mean(axis=1)
    k = int(np.argmin(objective))
    return float(grid[k]), float(objective[k])


def finite_diff(fn: Callable[[float], float], z: float, h: float = 1e-5) -> float:
    """Central finite-difference derivative estimate."""
    return (fn(z + h) - fn(z - h)) / (2.0 * h)


def self_check(seed: int = 42) -> list[tuple[str, bool, str]]:
    """Run the oracle suite against the library; returns (name, ok, detail) rows."""
    from .margin import md_loss_grad, optimize_alpha
    from .tree import TreeConfig, fit_tree

    rng = np.random.default_rng(seed)
    results: list[tuple[str, bool, str]] = []

    ok_all = True
    detail = ""
    for trial in range(20):
        m = int(rng.integers(8, 30))
        n = int(rng.integers(1, 4))
        X = rng.normal(size=(m, n))
        y = rng.integers(0, 3, size=m)
        if np.unique(y).size < 2:
            y[0] = (y[1] + 1) % 3
        w = rng.uniform(0.1, 1.0, size=m)
        expected = exhaustive_split(X, y, w)
        cfg = TreeConfig(kind="random_subset", max_depth=1, n_feature_candidates=n, seed=trial)
        model = fit_tree(X, y, w, cfg)
        if expected is None:
            got_leaf = model.node_feature[0] == -1
            ok_all &= bool(got_leaf)
            continue
        got = (int(model.node_feature[0]), float(model.node_threshold[0]))
        if got != (expected[0], expected[1]):
            ok_all = False
            detail = f"trial {trial}: tree chose {got}, oracle {expected[:2]}"
            break
    results.append(("split_search_matches_enumeration", ok_all, detail))

    ok_all = True
    detail = ""
    for trial in range(50):
        m = int(rng.integers(1, 40))
        prev = rng.uniform(-0.5, 1.5, size=m)
        margins = rng.uniform(-1.0, 1.0, size=m)
        params = MdLossParams(
            gamma=float(rng.choice([0.7, 0.8, 0.9, 0.95])),
            mu=float(rng.choice([0.01, 0.05, 0.1])),
        )
        alpha = optimize_alpha(prev, margins, params)
        obj = float(md_loss(prev + alpha * margins, params).mean())
        _, obj_star = grid_alpha(prev, margins, params)
        if not obj <= obj_star + 1e-6:
            ok_all = False
            detail = f"trial {trial}: objective {obj} vs grid {obj_star}"
            break
    results.append(("alpha_search_matches_grid", ok_all, detail))

    ok_all = True
    detail = ""
    params = MdLossParams(gamma=0.8, mu=0.1)
    h = 1e-5
    for z in np.linspace(-2.0, 3.0, 101):
        if abs(z - params.gamma) <= 2 * h:
            continue  # central differences straddle the curvature change there
        est = finite_diff(lambda t: md_loss(t, params), float(z), h=h)
        got = md_loss_grad(float(z), params)
        if abs(est - got) > 1e-6:
            ok_all = False
            detail = f"z={z}: fd {est} vs grad {got}"
            break
    # At the target itself the derivative is exactly 0 from both sides.
    if md_loss_grad(params.gamma, params) != 0.0:
        ok_all = False
        detail = "gradient at the target margin is not 0"
    results.append(("loss_gradient_matches_finite_difference", ok_all, detail))

    return results
