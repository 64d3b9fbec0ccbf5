import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score

from conftest import make_labeled_sequences
from liftguard.estimator import LiftingPostureClassifier


def sequences_as_arrays(n=8, seed=7):
    data = make_labeled_sequences(n, noise_std=0.0, seed=seed)
    X = np.stack([s.window.frames for s in data])
    y = np.array(["bad" if s.label.value else "good" for s in data])
    return X, y


@pytest.fixture(scope="module")
def fitted():
    X, y = sequences_as_arrays()
    est = LiftingPostureClassifier(lstm_hidden=(8,), dense_sizes=(6, 2),
                                   epochs=300, seed=1)
    return est.fit(X, y), X, y


class TestEstimatorApi:
    def test_fit_predict_separable(self, fitted):
        est, X, y = fitted
        assert est.history_.records[-1].categorical_accuracy == 1.0
        np.testing.assert_array_equal(est.predict(X), y)

    def test_score_is_accuracy(self, fitted):
        est, X, y = fitted
        assert est.score(X, y) == 1.0

    def test_classes_sorted_and_proba_columns_aligned(self, fitted):
        est, X, y = fitted
        assert list(est.classes_) == ["bad", "good"]
        proba = est.predict_proba(X)
        assert proba.shape == (len(y), 2)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)
        picked = est.classes_[np.argmax(proba, axis=1)]
        np.testing.assert_array_equal(picked, est.predict(X))

    def test_integer_labels_work(self):
        X, y = sequences_as_arrays(seed=9)
        y_int = (y == "bad").astype(int)
        est = LiftingPostureClassifier(lstm_hidden=(6,), dense_sizes=(4, 2),
                                       epochs=60, seed=0).fit(X, y_int)
        assert set(est.predict(X)) <= {0, 1}
        assert list(est.classes_) == [0, 1]

    def test_get_set_params_roundtrip(self):
        est = LiftingPostureClassifier(epochs=12, learning_rate=0.01, seed=5)
        params = est.get_params()
        assert params["epochs"] == 12
        other = LiftingPostureClassifier().set_params(**params)
        assert other.get_params() == params

    def test_clone_preserves_params(self):
        est = LiftingPostureClassifier(lstm_hidden=(4,), epochs=3)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_deterministic_fit(self):
        X, y = sequences_as_arrays(seed=11)
        a = LiftingPostureClassifier(lstm_hidden=(4,), dense_sizes=(3, 2),
                                     epochs=5, seed=3).fit(X, y)
        b = LiftingPostureClassifier(lstm_hidden=(4,), dense_sizes=(3, 2),
                                     epochs=5, seed=3).fit(X, y)
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))

    def test_cross_val_compatibility(self):
        X, y = sequences_as_arrays(n=8, seed=13)
        est = LiftingPostureClassifier(lstm_hidden=(4,), dense_sizes=(3, 2),
                                       epochs=4, seed=0)
        scores = cross_val_score(est, X, y, cv=2)
        assert scores.shape == (2,)
        assert np.all((scores >= 0) & (scores <= 1))


class TestEstimatorValidation:
    def test_wrong_rank_rejected(self):
        with pytest.raises(ValueError):
            LiftingPostureClassifier().fit(np.zeros((4, 30)), [0, 1, 0, 1])

    def test_wrong_window_length_rejected(self):
        with pytest.raises(ValueError, match="30"):
            LiftingPostureClassifier().fit(np.zeros((4, 29, 88)), [0, 1, 0, 1])

    def test_label_mismatch_rejected(self):
        with pytest.raises(ValueError):
            LiftingPostureClassifier().fit(np.zeros((4, 30, 88)), [0, 1])

    def test_unknown_label_vocabulary_rejected(self):
        with pytest.raises(ValueError, match="label"):
            LiftingPostureClassifier().fit(np.zeros((4, 30, 88)), ["up", "down", "up", "down"])

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            LiftingPostureClassifier().fit(np.zeros((4, 30, 88)), [0, 0, 0, 0])

    def test_predict_before_fit_rejected(self):
        with pytest.raises(ValueError, match="not fitted"):
            LiftingPostureClassifier().predict(np.zeros((1, 30, 88)))

    def test_feature_width_must_match_fit(self, fitted):
        est, X, _ = fitted
        with pytest.raises(ValueError, match="features"):
            est.predict(np.zeros((1, 30, X.shape[2] + 1)))
