"""Confusion-matrix based evaluation: per-class precision/recall/F1 and the
unweighted (macro) F1 average over classes with support."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise PreconditionError("y_true and y_pred must be 1-D arrays of equal length")
    if y_true.size == 0:
        raise PreconditionError("cannot evaluate an empty prediction set")
    for arr, what in ((y_true, "true"), (y_pred, "predicted")):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise PreconditionError(f"{what} labels outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


@dataclass
class EvalReport:
    confusion: np.ndarray        # (C, C) int, rows true
    precision: np.ndarray        # (C,) float, 0 where undefined
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray          # (C,) int
    macro_f1: float
    zero_support_classes: list[int]

    @property
    def normalized_confusion(self) -> np.ndarray:
        """Row-normalized confusion; rows without support stay all-zero."""
        row = self.confusion.sum(axis=1, keepdims=True).astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(row > 0, self.confusion / row, 0.0)
        return out

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())


def report_from_confusion(cm: np.ndarray) -> EvalReport:
    cm = np.asarray(cm, dtype=np.int64)
    tp = np.diag(cm).astype(np.float64)
    pred_tot = cm.sum(axis=0).astype(np.float64)
    true_tot = cm.sum(axis=1).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred_tot > 0, tp / pred_tot, 0.0)
        recall = np.where(true_tot > 0, tp / true_tot, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2.0 * precision * recall / denom, 0.0)
    supported = true_tot > 0
    macro = float(f1[supported].mean()) if supported.any() else 0.0
    return EvalReport(
        confusion=cm,
        precision=precision, recall=recall, f1=f1,
        support=true_tot.astype(np.int64),
        macro_f1=macro,
        zero_support_classes=list(np.nonzero(~supported)[0]),
    )


def evaluate_predictions(y_true, y_pred, n_classes: int) -> EvalReport:
    return report_from_confusion(confusion_matrix(y_true, y_pred, n_classes))


def macro_f1(y_true, y_pred, n_classes: int) -> float:
    return evaluate_predictions(y_true, y_pred, n_classes).macro_f1
