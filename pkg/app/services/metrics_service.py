import time
from typing import Optional, Sequence

import numpy as np

from ..exceptions import InvalidArgumentError
from ..models.network import Network
from ..schemas.network import ClassMetrics, InferenceTiming, MetricsReport


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int], num_classes: int) -> np.ndarray:
    """Counts with actual classes on rows and predicted classes on columns."""
    matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(matrix, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
    return matrix


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros_like(num, dtype=np.float64), where=den > 0)


def evaluate_metrics(confusion, labels: Optional[Sequence[str]] = None) -> MetricsReport:
    c = np.asarray(confusion)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidArgumentError(f"confusion matrix must be square, got shape {c.shape}")
    if np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
        raise InvalidArgumentError("confusion matrix must hold non-negative integer counts")
    c = c.astype(np.int64)
    total = int(c.sum())
    if total == 0:
        raise InvalidArgumentError("confusion matrix is all zeros")

    tp = np.diag(c).astype(np.float64)
    support = c.sum(axis=1).astype(np.float64)
    predicted = c.sum(axis=0).astype(np.float64)
    precision = _safe_ratio(tp, predicted)
    recall = _safe_ratio(tp, support)
    f1 = _safe_ratio(2 * precision * recall, precision + recall)

    present = support > 0
    weights = support / support.sum()
    names = list(labels) if labels is not None else [str(k) for k in range(len(c))]
    per_class = [
        ClassMetrics(label=names[k], support=int(support[k]), precision=float(precision[k]),
                     recall=float(recall[k]), f1=float(f1[k]))
        for k in range(len(c))
    ]
    return MetricsReport(
        accuracy=float(tp.sum() / total),
        total=total,
        correct=int(tp.sum()),
        per_class=per_class,
        macro_precision=float(precision[present].mean()),
        macro_recall=float(recall[present].mean()),
        macro_f1=float(f1[present].mean()),
        weighted_precision=float(np.sum(weights * precision)),
        weighted_recall=float(np.sum(weights * recall)),
        weighted_f1=float(np.sum(weights * f1)),
    )


def accuracy_excluding(confusion, excluded_errors: int) -> float:
    """Accuracy once ``excluded_errors`` misclassified (aberrant) samples are removed from the set."""
    c = np.asarray(confusion, dtype=np.int64)
    errors = int(c.sum() - np.trace(c))
    if excluded_errors < 0 or excluded_errors > errors:
        raise InvalidArgumentError(f"cannot exclude {excluded_errors} of {errors} errors")
    return float(np.trace(c) / (c.sum() - excluded_errors))


def time_inference(model: Network, samples: np.ndarray, batch_size: int = 1) -> InferenceTiming:
    """Mean wall-clock seconds per sample of a forward pass."""
    if len(samples) == 0:
        return InferenceTiming(samples=0, mean_seconds=0.0)
    start = time.perf_counter()
    model.predict_proba(samples, batch_size=batch_size)
    return InferenceTiming(samples=len(samples), mean_seconds=(time.perf_counter() - start) / len(samples))
