"""Scikit-learn style estimator facade over the cascade trainer.

`MddfClassifier` follows the standard fit/predict/predict_proba contract
(plus `transform`, which returns the learned representation [x, f_T(x)]),
so the cascade drops into pipelines, grid search, and cross-validation like
any other classifier.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .cascade import CascadeConfig, predict_scores_batch, train
from .dataset import Dataset
from .errors import DataError
from .margin import MdLossParams
from .validation import as_float_matrix


class MddfClassifier(BaseEstimator, ClassifierMixin, TransformerMixin):
    """Margin-distribution deep forest classifier.

    Parameters mirror the cascade configuration: `gamma` is the target
    margin mean in (0,1), `mu` discounts deviations above the target,
    `depth_schedule` grows the per-layer tree depth cap, and `mode` selects
    the structural variant (`full`, `same_forests`, `stacking_only`,
    `no_preconc`).
    """

    def __init__(self, max_layers=10, k_folds=5, n_trees=100, gamma=0.8, mu=0.1,
                 depth_schedule="4t+4", mode="full", early_stop_patience=2,
                 validation_fraction=0.0, alpha_max=4.0, n_jobs=1, random_state=42):
        self.max_layers = max_layers
        self.k_folds = k_folds
        self.n_trees = n_trees
        self.gamma = gamma
        self.mu = mu
        self.depth_schedule = depth_schedule
        self.mode = mode
        self.early_stop_patience = early_stop_patience
        self.validation_fraction = validation_fraction
        self.alpha_max = alpha_max
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _config(self) -> CascadeConfig:
        config = CascadeConfig(
            max_layers=self.max_layers,
            k_folds=self.k_folds,
            n_trees=self.n_trees,
            loss=MdLossParams(gamma=self.gamma, mu=self.mu),
            depth_schedule=self.depth_schedule,
            mode=self.mode,
            early_stop_patience=self.early_stop_patience,
            validation_fraction=self.validation_fraction,
            alpha_max=self.alpha_max,
            n_jobs=self.n_jobs,
            seed=self.random_state,
        )
        config.validate()
        return config

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.shape[0] < 2:
            raise DataError("need at least 2 classes")
        data = Dataset(
            features=X,
            labels=encoded.astype(np.int64),
            n_classes=self.classes_.shape[0],
            label_names=[str(c) for c in self.classes_],
        )
        self.model_ = train(data, self._config())
        self.n_features_in_ = X.shape[1]
        self.n_layers_ = self.model_.n_layers
        self.training_report_ = self.model_.training_report
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise DataError("this MddfClassifier instance is not fitted yet")

    def decision_function(self, X):
        """Raw accumulated score vectors f_T(x), shape (m, n_classes)."""
        self._check_fitted()
        return predict_scores_batch(self.model_, X)

    def predict_proba(self, X):
        """Scores normalized to a simplex (the argmax is unchanged)."""
        scores = self.decision_function(X)
        totals = scores.sum(axis=1, keepdims=True)
        totals[totals <= 0] = 1.0
        return scores / totals

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[scores.argmax(axis=1)]

    def transform(self, X):
        """Learned representation [x, f_T(x)] for downstream estimators."""
        self._check_fitted()
        X = as_float_matrix(X)
        return np.hstack([X, predict_scores_batch(self.model_, X)])
