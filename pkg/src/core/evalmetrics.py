"""Classification and regression evaluation metrics."""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from sklearn import metrics as sm

from .errors import EmptyInput, LabelOutOfRange, ShapeMismatch, SingleClass

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = actual, columns = predicted

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # descending; the first entry is +inf

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass
class ClassReport:
    precision: float
    recall: float
    f1: float
    degenerate: bool = False  # a zero denominator was replaced by 0


@dataclass
class EvaluationReport:
    accuracy: float
    per_class: Dict[int, ClassReport] = field(default_factory=dict)
    macro_precision: float = 0.0
    macro_recall: float = 0.0
    macro_f1: float = 0.0
    auc: float = float('nan')


def confusion(actual: Sequence[int], predicted: Sequence[int], k: int) -> ConfusionMatrix:
    actual = np.asarray(actual, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise ShapeMismatch("actual and predicted labels must be 1-D with equal length")
    for name, labels in (('actual', actual), ('predicted', predicted)):
        bad = (labels < 0) | (labels >= k)
        if np.any(bad):
            raise LabelOutOfRange(f"{name} label {labels[bad][0]} outside [0, {k})")
    counts = sm.confusion_matrix(actual, predicted, labels=np.arange(k)) if actual.size else np.zeros((k, k), int)
    return ConfusionMatrix(np.asarray(counts, dtype=np.int64))


def _ratio(num: float, den: float) -> Tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def prf1(matrix: ConfusionMatrix, positive_class: int = 1) -> ClassReport:
    """One-vs-rest precision, recall and F1 for a class; 0 on vanishing denominators."""
    c = matrix.counts
    tp = c[positive_class, positive_class]
    fp = c[:, positive_class].sum() - tp
    fn = c[positive_class, :].sum() - tp
    precision, d1 = _ratio(tp, tp + fp)
    recall, d2 = _ratio(tp, tp + fn)
    f1, d3 = _ratio(2 * precision * recall, precision + recall)
    degenerate = d1 or d2 or d3
    if degenerate:
        logger.warning(f"Zero denominator in precision/recall/F1 for class {positive_class}")
    return ClassReport(float(precision), float(recall), float(f1), degenerate)


def macro_prf1(matrix: ConfusionMatrix) -> Tuple[Dict[int, ClassReport], ClassReport]:
    per_class = {k: prf1(matrix, k) for k in range(matrix.k)}
    reports = list(per_class.values())
    macro = ClassReport(
        precision=float(np.mean([r.precision for r in reports])),
        recall=float(np.mean([r.recall for r in reports])),
        f1=float(np.mean([r.f1 for r in reports])),
        degenerate=any(r.degenerate for r in reports),
    )
    return per_class, macro


def accuracy(matrix: ConfusionMatrix) -> float:
    if matrix.total == 0:
        raise EmptyInput("accuracy of an empty confusion matrix")
    return float(np.trace(matrix.counts) / matrix.total)


def mae(pred: Sequence[float], actual: Sequence[float]) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.size == 0:
        raise EmptyInput("mae of empty input")
    if pred.shape != actual.shape:
        raise ShapeMismatch(f"prediction shape {pred.shape} != target shape {actual.shape}")
    return float(np.mean(np.abs(pred - actual)))


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> Tuple[RocCurve, float]:
    """ROC over every distinct score (ties grouped) and trapezoidal AUC."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise ShapeMismatch("scores and labels must have equal length")
    if np.unique(labels).size < 2:
        raise SingleClass("ROC needs both positive and negative samples")
    fpr, tpr, thresholds = sm.roc_curve(labels, scores, drop_intermediate=False)
    return RocCurve(fpr, tpr, thresholds), float(sm.auc(fpr, tpr))


def evaluate_classifier(actual: Sequence[int], predicted: Sequence[int], k: int,
                        scores: Union[Sequence[float], None] = None) -> Tuple[ConfusionMatrix, EvaluationReport]:
    matrix = confusion(actual, predicted, k)
    per_class, macro = macro_prf1(matrix)
    report = EvaluationReport(
        accuracy=accuracy(matrix),
        per_class=per_class,
        macro_precision=macro.precision,
        macro_recall=macro.recall,
        macro_f1=macro.f1,
    )
    if scores is not None and k == 2:
        try:
            _, report.auc = roc_auc(scores, actual)
        except SingleClass as e:
            logger.warning(f"Skipping ROC AUC: {e}")
    return matrix, report


def write_metrics_csv(path: Union[str, Path], report: EvaluationReport) -> None:
    """Write `metric,value` rows; per-class rows are suffixed with the class index."""
    rows = [('accuracy', report.accuracy),
            ('macro_precision', report.macro_precision),
            ('macro_recall', report.macro_recall),
            ('macro_f1', report.macro_f1)]
    if not np.isnan(report.auc):
        rows.append(('roc_auc', report.auc))
    for k, r in sorted(report.per_class.items()):
        rows += [(f'precision_{k}', r.precision), (f'recall_{k}', r.recall), (f'f1_{k}', r.f1)]
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['metric', 'value'])
        for name, value in rows:
            writer.writerow([name, repr(float(value))])
    logger.info(f"Metrics written to {path}")


def write_regression_csv(path: Union[str, Path], values: Dict[str, float]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['metric', 'value'])
        for name, value in values.items():
            writer.writerow([name, repr(float(value))])
    logger.info(f"Metrics written to {path}")
