"""Scikit-learn style estimator facade over the sequence classifier.

Lets the posture model participate in the wider ecosystem (pipelines,
cross-validation, grid search) through the standard fit/predict/
predict_proba/get_params surface.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .network import ArchitectureConfig, ConfigError, forward_batch
from .pose import WINDOW_LENGTH, Label, LabeledSequence, SequenceWindow
from .training import TrainingConfig, fit as fit_loop

_LABEL_VOCAB = {
    0: Label.GOOD, 1: Label.BAD,
    False: Label.GOOD, True: Label.BAD,
    "good": Label.GOOD, "bad": Label.BAD,
    "Good": Label.GOOD, "Bad": Label.BAD,
}


def _validate_sequences(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise ValueError(f"X must be (n_sequences, {WINDOW_LENGTH}, n_features), got shape {X.shape}")
    if X.shape[1] != WINDOW_LENGTH:
        raise ValueError(f"sequences must span {WINDOW_LENGTH} frames, got {X.shape[1]}")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    return X


class LiftingPostureClassifier(ClassifierMixin, BaseEstimator):
    """Stacked-LSTM classifier for 30-frame pose feature sequences.

    X is an array of shape (n_sequences, 30, n_features); y holds two
    classes, given as 0/1, booleans, or the strings "good"/"bad"
    (0, False and "good" mean good posture).
    """

    def __init__(
        self,
        lstm_hidden=(64, 128, 64),
        dense_sizes=(64, 32, 2),
        epochs=150,
        learning_rate=0.001,
        early_stop_threshold=0.95,
        early_stop_patience=5,
        grad_clip_norm=5.0,
        batch_size=None,
        seed=0,
    ):
        self.lstm_hidden = lstm_hidden
        self.dense_sizes = dense_sizes
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.early_stop_threshold = early_stop_threshold
        self.early_stop_patience = early_stop_patience
        self.grad_clip_norm = grad_clip_norm
        self.batch_size = batch_size
        self.seed = seed

    def _encode_labels(self, y) -> list[Label]:
        encoded = []
        for value in y:
            key = value.item() if isinstance(value, np.generic) else value
            if isinstance(key, str):
                key = key.lower()
            if isinstance(key, Label):
                encoded.append(key)
            elif key in (0, 1, False, True, "good", "bad"):
                encoded.append(_LABEL_VOCAB[key])
            else:
                raise ValueError(f"unsupported label {value!r}; use 0/1 or 'good'/'bad'")
        return encoded

    def fit(self, X, y):
        X = _validate_sequences(X)
        y = np.asarray(y)
        if len(y) != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} sequences but y has {len(y)} labels")
        labels = self._encode_labels(y)
        if len({l for l in labels}) < 2:
            raise ValueError("training data must include both classes")
        data = [
            LabeledSequence(window=SequenceWindow(frames=seq), label=label)
            for seq, label in zip(X, labels)
        ]
        arch = ArchitectureConfig(
            input_width=X.shape[2],
            lstm_hidden=tuple(self.lstm_hidden),
            dense_sizes=tuple(self.dense_sizes),
        )
        cfg = TrainingConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            early_stop_threshold=self.early_stop_threshold,
            early_stop_patience=self.early_stop_patience,
            grad_clip_norm=self.grad_clip_norm,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        try:
            self.model_, self.history_ = fit_loop(data, arch, cfg)
        except ConfigError as exc:
            raise ValueError(str(exc)) from None
        # classes_ sorted per sklearn convention, each mapped to its core label.
        label_for_class: dict = {}
        for value, lab in zip(y, labels):
            key = value.item() if isinstance(value, np.generic) else value
            label_for_class.setdefault(key, lab)
        self._label_for_class = label_for_class
        self.classes_ = np.array(sorted(label_for_class, key=str))
        self.n_features_in_ = X.shape[2]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise ValueError("this classifier is not fitted yet; call fit first")

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities with columns ordered like self.classes_."""
        self._check_fitted()
        X = _validate_sequences(X)
        if X.shape[2] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[2]} features, classifier was fitted with {self.n_features_in_}"
            )
        core = forward_batch(self.model_, np.transpose(X, (1, 0, 2)))  # columns (good, bad)
        out = np.empty_like(core)
        for col, cls in enumerate(self.classes_):
            key = cls.item() if isinstance(cls, np.generic) else cls
            out[:, col] = core[:, self._label_for_class[key].value]
        return out

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
