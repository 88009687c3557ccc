"""Input validation helpers used by the core operations and the estimator."""

from __future__ import annotations

import numpy as np

from .errors import DataError, DimensionError

WEIGHT_SUM_TOL = 1e-9


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got ndim={X.ndim}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise DataError(f"{name} contains NaN or infinite values")
    return X


def as_label_vector(y, n_rows: int, name: str = "y") -> np.ndarray:
    """Coerce to a 1-D int64 label vector aligned with `n_rows`."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise DataError(f"{name} must be 1-dimensional, got ndim={y.ndim}")
    if y.shape[0] != n_rows:
        raise DataError(f"{name} has {y.shape[0]} entries, expected {n_rows}")
    if not np.issubdtype(y.dtype, np.integer):
        yi = y.astype(np.int64)
        if not np.array_equal(yi, y):
            raise DataError(f"{name} must contain integer class indices")
        y = yi
    if y.size and y.min() < 0:
        raise DataError(f"{name} contains negative class indices")
    return y.astype(np.int64)


def as_weight_vector(w, n_rows: int, name: str = "sample_weights") -> np.ndarray:
    """Coerce to a nonnegative float64 weight vector of length `n_rows`."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n_rows,):
        raise DataError(f"{name} must have shape ({n_rows},), got {w.shape}")
    if not np.isfinite(w).all():
        raise DataError(f"{name} contains NaN or infinite values")
    if (w < 0).any():
        raise DataError(f"{name} contains negative entries")
    return w


def check_distribution(w, n_rows: int, name: str = "sample_weights") -> np.ndarray:
    """Validate that `w` is a probability distribution over `n_rows` samples."""
    w = as_weight_vector(w, n_rows, name)
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise DataError(f"{name} must sum to 1 (got {total!r})")
    return w


def check_width(X: np.ndarray, expected: int, name: str = "input") -> None:
    if X.shape[1] != expected:
        raise DimensionError(
            f"{name} has {X.shape[1]} columns, model expects {expected}"
        )


def check_simplex(p, tol: float = 1e-6, name: str = "prediction") -> np.ndarray:
    """Validate a probability simplex vector (nonnegative, sums to 1)."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise DataError(f"{name} must be a vector")
    if (p < -tol).any() or abs(p.sum() - 1.0) > tol:
        raise DataError(f"{name} is not a probability simplex vector")
    return p
