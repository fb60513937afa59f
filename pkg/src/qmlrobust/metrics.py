"""Binary-classifier evaluation: confusion counts, scalar metrics, ROC and
precision-recall sweeps with trapezoidal AUC.

Class +1 is the positive class throughout, and a sample is predicted
positive when its score is >= the threshold. Curve sweeps run over the
distinct scores in descending order with +/-inf sentinels, so tied scores
always flip together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ScalarMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass
class Curve:
    points: np.ndarray  # (m, 2) of (x, y)
    auc: float
    kind: str  # "roc" or "pr"


def _check_scored(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=float)
    if labels.shape != scores.shape:
        raise ValueError(f"labels {labels.shape} and scores {scores.shape} differ in length")
    if labels.size == 0:
        raise ValueError("no samples to evaluate")
    if not np.all(np.isin(labels, (-1, 1))):
        raise ValueError("labels must all be -1 or +1")
    return labels, scores


def confusion(labels, scores, threshold: float = 0.0) -> ConfusionMatrix:
    """Count tp/fp/fn/tn at one threshold (predicted +1 iff score >= threshold)."""
    labels, scores = _check_scored(labels, scores)
    predicted_pos = scores >= threshold
    actual_pos = labels > 0
    return ConfusionMatrix(
        tp=int(np.sum(predicted_pos & actual_pos)),
        fp=int(np.sum(predicted_pos & ~actual_pos)),
        fn=int(np.sum(~predicted_pos & actual_pos)),
        tn=int(np.sum(~predicted_pos & ~actual_pos)),
    )


def scalar_metrics(cm: ConfusionMatrix) -> ScalarMetrics:
    """Accuracy/precision/recall/F1 with zero-division conventions mapping to 0."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ScalarMetrics(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def _sweep(labels: np.ndarray, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative (tp, fp) at thresholds +inf, each distinct score descending, -inf."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp_cum = np.cumsum(sorted_labels > 0)
    fp_cum = np.cumsum(sorted_labels < 0)
    # last index of each tie group = where the next value differs
    group_end = np.append(np.nonzero(np.diff(sorted_scores))[0], labels.size - 1)
    tp = np.concatenate([[0], tp_cum[group_end], [tp_cum[-1]]])
    fp = np.concatenate([[0], fp_cum[group_end], [fp_cum[-1]]])
    return tp, fp


def _dedupe(points: list[tuple[float, float]]) -> np.ndarray:
    kept = [points[0]]
    for p in points[1:]:
        if p != kept[-1]:
            kept.append(p)
    return np.asarray(kept)


def _trapezoid(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def roc_curve(labels, scores) -> Curve:
    """(FPR, TPR) sweep from (0,0) to (1,1); AUC by trapezoid."""
    labels, scores = _check_scored(labels, scores)
    n_pos = int(np.sum(labels > 0))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC undefined: need at least one positive and one negative label")
    tp, fp = _sweep(labels, scores)
    points = _dedupe(list(zip(fp / n_neg, tp / n_pos)))
    return Curve(points=points, auc=_trapezoid(points), kind="roc")


def pr_curve(labels, scores) -> Curve:
    """(recall, precision) sweep; anchored at recall 0 with the top-threshold precision."""
    labels, scores = _check_scored(labels, scores)
    n_pos = int(np.sum(labels > 0))
    if n_pos == 0:
        raise ValueError("PR curve undefined: no positive labels")
    tp, fp = _sweep(labels, scores)
    predicted = tp + fp
    precision = np.empty(tp.size, dtype=float)
    np.divide(tp, predicted, out=precision, where=predicted > 0)
    precision[0] = precision[1]  # recall-0 anchor: precision at the highest threshold
    recall = tp / n_pos
    points = _dedupe(list(zip(recall, precision)))
    return Curve(points=points, auc=_trapezoid(points), kind="pr")


def write_curve_csv(curve: Curve, path: str | Path) -> None:
    lines = ["x,y"]
    lines += [f"{format(px, '.17e')},{format(py, '.17e')}" for px, py in curve.points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_curve_csv(path: str | Path, kind: str = "roc") -> Curve:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "x,y":
        raise ValueError(f"{path}: expected 'x,y' header")
    points = np.asarray([[float(v) for v in line.split(",")] for line in lines[1:]])
    return Curve(points=points, auc=_trapezoid(points), kind=kind)


def predict_labels(scores) -> np.ndarray:
    """sign(score) with sign(0) = +1."""
    return np.where(np.asarray(scores) >= 0.0, 1, -1)


def accuracy_of(labels, scores) -> float:
    labels, scores = _check_scored(labels, scores)
    return float(np.mean(predict_labels(scores) == labels))
