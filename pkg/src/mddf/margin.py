"""Margin mathematics: multiclass margins, the margin-distribution loss, its
gradient, sample reweighting, layer-coefficient optimization, and summary
statistics (mean, variance, and the std/mean ratio).

The loss penalizes squared deviation of a margin z from the target gamma,
scaled by 1/gamma^2 below the target and by mu/(1-gamma)^2 above it, so both
a low margin mean and a high margin variance are charged. Minimizing its
expectation drives the std/mean ratio down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .validation import check_simplex

GAMMA_GRID = (0.7, 0.75, 0.8, 0.85, 0.9, 0.95)
MU_GRID = (0.01, 0.05, 0.1)


@dataclass
class MdLossParams:
    gamma: float = 0.8  # target margin mean, in (0,1)
    mu: float = 0.1  # above-target deviation discount, in (0,1]

    def validate(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError(f"gamma must be in (0,1), got {self.gamma}")
        if not (0.0 < self.mu <= 1.0):
            raise ConfigError(f"mu must be in (0,1], got {self.mu}")


@dataclass
class OptimizerConfig:
    """Bounded 1-D search for a layer coefficient."""

    alpha_max: float = 4.0

    def validate(self) -> None:
        if self.alpha_max <= 0:
            raise ConfigError("alpha_max must be positive")


@dataclass
class MarginStats:
    mean: float
    variance: float  # population variance
    lambda_ratio: float  # std / |mean|; +inf sentinel when mean == 0
    histogram: dict = field(default_factory=dict)  # {"bin_edges": [...], "counts": [...]}

    def to_dict(self) -> dict:
        lam = self.lambda_ratio
        return {
            "mean": self.mean,
            "variance": self.variance,
            "lambda_ratio": None if not np.isfinite(lam) else lam,
            "histogram": self.histogram,
        }


def multiclass_margin(prediction, true_class: int) -> float:
    """True-class score minus the best other-class score, in [-1, 1]."""
    p = check_simplex(prediction)
    if not (0 <= true_class < p.shape[0]):
        raise DataError(f"class index {true_class} out of range for {p.shape[0]} classes")
    others = np.delete(p, true_class)
    return float(p[true_class] - others.max())


def multiclass_margin_batch(predictions: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Row-wise margin of an (m, s) score matrix against integer labels."""
    predictions = np.asarray(predictions, dtype=np.float64)
    m = predictions.shape[0]
    rows = np.arange(m)
    own = predictions[rows, labels]
    masked = predictions.copy()
    masked[rows, labels] = -np.inf
    return own - masked.max(axis=1)


def md_loss(z, params: MdLossParams):
    """Margin-distribution loss; scalar in, scalar out (arrays broadcast)."""
    params.validate()
    z = np.asarray(z, dtype=np.float64)
    d = z - params.gamma
    below = d * d / params.gamma**2
    above = params.mu * d * d / (1.0 - params.gamma) ** 2
    out = np.where(z <= params.gamma, below, above)
    return float(out) if out.ndim == 0 else out


def md_loss_grad(z, params: MdLossParams):
    """Derivative of md_loss; the one-sided derivatives agree (both 0) at
    z == gamma, so the value there is 0."""
    params.validate()
    z = np.asarray(z, dtype=np.float64)
    d = z - params.gamma
    below = 2.0 * d / params.gamma**2
    above = 2.0 * params.mu * d / (1.0 - params.gamma) ** 2
    out = np.where(z <= params.gamma, below, above)
    return float(out) if out.ndim == 0 else out


def optimize_alpha(prev_cumulative, layer_margins, params: MdLossParams,
                   optimizer_cfg: OptimizerConfig | None = None) -> float:
    """Coefficient in [0, alpha_max] minimizing the mean loss of
    prev_cumulative + alpha * layer_margins.

    The objective is convex and piecewise quadratic in alpha: sample i
    changes loss branch exactly where prev_i + alpha * g_i crosses gamma.
    Scanning the breakpoints and minimizing each quadratic segment gives the
    exact bounded minimizer, so alpha = 0 (stopping) is never beaten by the
    returned value.
    """
    cfg = optimizer_cfg or OptimizerConfig()
    cfg.validate()
    params.validate()
    prev = np.asarray(prev_cumulative, dtype=np.float64)
    g = np.asarray(layer_margins, dtype=np.float64)
    if prev.shape != g.shape or prev.ndim != 1:
        raise DataError("prev_cumulative and layer_margins must be equal-length vectors")

    if g.size == 0 or np.max(np.abs(g)) < 1e-15:
        return 0.0  # objective constant in alpha

    c_below = 1.0 / params.gamma**2
    c_above = params.mu / (1.0 - params.gamma) ** 2
    p = prev - params.gamma  # loss_i = c_i * (p_i + alpha * g_i)^2

    # Branch of each sample on the first segment (alpha -> 0+).
    above = (p > 0) | ((p == 0) & (g > 0))
    c = np.where(above, c_above, c_below)
    quad_a = float((c * g * g).sum())
    quad_b = float((2.0 * c * g * p).sum())
    quad_c = float((c * p * p).sum())

    moving = np.abs(g) > 0
    cross = np.full(g.shape, -1.0)
    cross[moving] = -p[moving] / g[moving]
    live = moving & (cross > 0.0) & (cross < cfg.alpha_max)
    order = np.argsort(cross[live], kind="stable")
    evt_alpha = cross[live][order]
    # Crossing upward (g > 0) switches below -> above; downward the reverse.
    delta_c = np.where(g[live][order] > 0, c_above - c_below, c_below - c_above)
    evt_da = delta_c * g[live][order] ** 2
    evt_db = 2.0 * delta_c * g[live][order] * p[live][order]
    evt_dc = delta_c * p[live][order] ** 2

    best_alpha = 0.0
    best_value = np.inf
    lo = 0.0
    bounds = np.append(evt_alpha, cfg.alpha_max)
    for k in range(bounds.size):
        hi = float(bounds[k])
        if hi >= lo:
            cand = lo if quad_a <= 0 else min(max(-quad_b / (2.0 * quad_a), lo), hi)
            value = (quad_a * cand + quad_b) * cand + quad_c
            if value < best_value - 1e-15 * (1.0 + abs(value)):
                best_value = value
                best_alpha = cand
            lo = hi
        if k < evt_alpha.size:
            quad_a += float(evt_da[k])
            quad_b += float(evt_db[k])
            quad_c += float(evt_dc[k])
    return float(best_alpha) + 0.0  # normalize -0.0


def reweight(cumulative_margins, params: MdLossParams) -> np.ndarray:
    """Next sample distribution: per-sample loss normalized to sum 1.

    Uniform when every loss is (numerically) zero, mirroring the uniform
    initial weights.
    """
    z = np.asarray(cumulative_margins, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise DataError("cumulative_margins must be a nonempty vector")
    losses = md_loss(z, params)
    total = losses.sum()
    if total < 1e-12:
        return np.full(z.size, 1.0 / z.size)
    return losses / total


def margin_stats(cumulative_margins, n_bins: int = 50) -> MarginStats:
    """Population mean/variance, std/mean ratio, and a binned histogram."""
    z = np.asarray(cumulative_margins, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise DataError("cumulative_margins must be a nonempty vector")
    mean = float(z.mean())
    variance = float(z.var())  # population (ddof=0)
    if mean == 0.0:
        lam = np.inf
    else:
        lam = float(np.sqrt(variance) / abs(mean))
    counts, edges = np.histogram(z, bins=n_bins)
    return MarginStats(
        mean=mean,
        variance=variance,
        lambda_ratio=lam,
        histogram={"bin_edges": edges.tolist(), "counts": counts.tolist()},
    )
