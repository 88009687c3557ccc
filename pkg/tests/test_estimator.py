import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import GridSearchCV
from sklearn.pipeline import Pipeline

from conftest import make_blobs
from mddf.errors import ConfigError, DataError
from mddf.estimator import MddfClassifier

pytestmark = pytest.mark.filterwarnings(
    "ignore:fold .* complement contains a single class"
)


def tiny_clf(**overrides):
    params = dict(max_layers=2, k_folds=2, n_trees=3, random_state=7,
                  early_stop_patience=0)
    params.update(overrides)
    return MddfClassifier(**params)


class TestEstimatorContract:
    def test_get_set_params_round_trip(self):
        clf = tiny_clf(gamma=0.9)
        params = clf.get_params()
        assert params["gamma"] == 0.9
        clf.set_params(mu=0.05)
        assert clf.mu == 0.05

    def test_clone(self):
        clf = tiny_clf(gamma=0.85)
        cloned = clone(clf)
        assert cloned.get_params() == clf.get_params()

    def test_fit_predict_with_string_labels(self):
        X, y = make_blobs(m=24, n=2, s=2, seed=0, spread=0.3)
        names = np.array(["cat", "dog"])[y]
        clf = tiny_clf().fit(X, names)
        pred = clf.predict(X)
        assert set(pred) <= {"cat", "dog"}
        assert (pred == names).mean() > 0.8

    def test_predict_proba_is_simplex(self):
        X, y = make_blobs(m=24, n=2, s=3, seed=1)
        clf = tiny_clf().fit(X, y)
        proba = clf.predict_proba(X)
        assert (proba >= 0).all()
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_array_equal(
            proba.argmax(axis=1), clf.decision_function(X).argmax(axis=1)
        )

    def test_transform_width(self):
        X, y = make_blobs(m=20, n=4, s=2, seed=2)
        clf = tiny_clf().fit(X, y)
        rep = clf.transform(X)
        assert rep.shape == (20, 4 + 2)

    def test_unfitted_raises(self):
        with pytest.raises(DataError, match="not fitted"):
            tiny_clf().predict(np.zeros((2, 2)))

    def test_bad_gamma_raises(self):
        X, y = make_blobs(m=12, n=2, s=2, seed=3)
        with pytest.raises(ConfigError):
            tiny_clf(gamma=1.5).fit(X, y)

    def test_mismatched_lengths(self):
        with pytest.raises(DataError):
            tiny_clf().fit(np.zeros((4, 2)), np.zeros(3))


class TestEcosystem:
    def test_grid_search_cv_smoke(self):
        X, y = make_blobs(m=36, n=2, s=2, seed=4, spread=0.4)
        search = GridSearchCV(
            tiny_clf(max_layers=1),
            {"gamma": [0.7, 0.9]},
            cv=2,
            n_jobs=1,
        )
        search.fit(X, y)
        assert search.best_params_["gamma"] in (0.7, 0.9)

    def test_pipeline_transform_then_classify(self):
        from sklearn.linear_model import LogisticRegression

        X, y = make_blobs(m=30, n=3, s=2, seed=5, spread=0.5)
        pipe = Pipeline([
            ("forest_rep", tiny_clf(max_layers=1)),
            ("linear", LogisticRegression(max_iter=200)),
        ])
        pipe.fit(X, y)
        assert pipe.score(X, y) > 0.8
