"""Evaluation metrics: confusion matrix, accuracy, ROC curve, AUC.

Class order is (Good, Bad) throughout and the positive class for the ROC
sweep is Bad, the detection target. Scores are P(Bad).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .pose import Label


class MetricsError(ValueError):
    pass


class UndefinedRocError(MetricsError):
    """ROC needs both classes among the actual labels."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 counts indexed (actual, predicted), class order (Good, Bad)."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.shape != (2, 2):
            raise MetricsError(f"confusion matrix must be 2x2, got {arr.shape}")
        if (arr < 0).any():
            raise MetricsError("confusion counts must be non-negative")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    accuracy: float
    roc_points: list[tuple[float, float]]
    auc: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "confusion": [[int(v) for v in row] for row in self.confusion.counts],
                "accuracy": self.accuracy,
                "roc": [[fpr, tpr] for fpr, tpr in self.roc_points],
                "auc": self.auc,
            },
            separators=(",", ":"),
        )

    def roc_csv(self) -> str:
        lines = ["fpr,tpr"]
        lines += [f"{fpr!r},{tpr!r}" for fpr, tpr in self.roc_points]
        return "\n".join(lines) + "\n"


def confusion_matrix(predicted: list[Label], actual: list[Label]) -> ConfusionMatrix:
    if len(predicted) != len(actual):
        raise MetricsError(
            f"predicted ({len(predicted)}) and actual ({len(actual)}) lengths differ"
        )
    if not predicted:
        raise MetricsError("cannot build a confusion matrix from zero samples")
    counts = np.zeros((2, 2), dtype=np.int64)
    for p, a in zip(predicted, actual):
        counts[a.value, p.value] += 1
    return ConfusionMatrix(counts=counts)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise MetricsError("confusion matrix is empty")
    return float(np.trace(cm.counts) / cm.total)


def roc_curve(scores, actual: list[Label]) -> list[tuple[float, float]]:
    """ROC points from P(Bad) scores, one point per distinct score.

    The sweep walks distinct score values descending, classifying Bad
    wherever score >= threshold; (0,0) and (1,1) sentinels bound the
    curve and exact duplicate points are collapsed.
    """
    scores = [float(s) for s in scores]
    if len(scores) != len(actual):
        raise MetricsError(f"scores ({len(scores)}) and actual ({len(actual)}) lengths differ")
    pos = sum(1 for a in actual if a is Label.BAD)
    neg = len(actual) - pos
    if pos == 0 or neg == 0:
        raise UndefinedRocError("ROC undefined when actual labels hold a single class")

    order = sorted(range(len(scores)), key=lambda k: -scores[k])
    points = [(0.0, 0.0)]
    tp = fp = 0
    k = 0
    while k < len(order):
        threshold = scores[order[k]]
        # Consume the whole tie group at this threshold.
        while k < len(order) and scores[order[k]] == threshold:
            if actual[order[k]] is Label.BAD:
                tp += 1
            else:
                fp += 1
            k += 1
        points.append((fp / neg, tp / pos))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    deduped = [points[0]]
    for pt in points[1:]:
        if pt != deduped[-1]:
            deduped.append(pt)
    return deduped


def auc(points: list[tuple[float, float]]) -> float:
    """Area under a piecewise-linear ROC curve by the trapezoidal rule."""
    if len(points) < 2:
        raise MetricsError("need at least two ROC points")
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def eval_report(predicted: list[Label], actual: list[Label], scores) -> EvalReport:
    """Bundle the full evaluation surface over held-out predictions."""
    cm = confusion_matrix(predicted, actual)
    points = roc_curve(scores, actual)
    return EvalReport(confusion=cm, accuracy=accuracy(cm), roc_points=points, auc=auc(points))
