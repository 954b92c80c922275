from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from sklearn.metrics import confusion_matrix

from guardnet import CLASS_NAMES
from guardnet.errors import RangeError, ShapeError


@dataclass(slots=True)
class ConfusionMatrix:
    """Rows are actual classes, columns predicted classes."""

    counts: np.ndarray
    class_names: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def supports(self) -> list[int]:
        return [int(value) for value in self.counts.sum(axis=1)]

    def trace(self) -> int:
        return int(np.trace(self.counts))

    def to_json(self) -> list[list[int]]:
        return [[int(value) for value in row] for row in self.counts]


@dataclass(slots=True)
class ClassMetrics:
    name: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    tn: int
    fp: int
    fn: int
    undefined: tuple[str, ...] = ()

    @property
    def support(self) -> int:
        return self.tp + self.fn

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "undefined": list(self.undefined),
        }


@dataclass(slots=True)
class MetricsReport:
    classes: list[ClassMetrics]
    macro: dict[str, float]
    micro_accuracy: float
    confusion: ConfusionMatrix

    def to_json(self) -> dict[str, Any]:
        return {
            "classes": [item.to_json() for item in self.classes],
            "macro": dict(self.macro),
            "micro_accuracy": self.micro_accuracy,
            "confusion": self.confusion.to_json(),
        }


def confusion_from_predictions(
    actual: Sequence[int],
    predicted: Sequence[int],
    num_classes: int,
    class_names: Sequence[str] | None = None,
) -> ConfusionMatrix:
    if len(actual) != len(predicted):
        raise ShapeError(
            f"actual has {len(actual)} labels but predicted has {len(predicted)}"
        )
    names = tuple(class_names) if class_names is not None else _default_names(num_classes)
    if len(names) != num_classes:
        raise ShapeError(f"{len(names)} class names for {num_classes} classes")
    actual_arr = np.asarray(actual, dtype=np.int64).reshape(-1)
    predicted_arr = np.asarray(predicted, dtype=np.int64).reshape(-1)
    for values in (actual_arr, predicted_arr):
        if values.size and (values.min() < 0 or values.max() >= num_classes):
            raise RangeError(f"labels must lie in [0, {num_classes})")
    if actual_arr.size == 0:
        counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    else:
        counts = confusion_matrix(actual_arr, predicted_arr, labels=list(range(num_classes)))
        counts = counts.astype(np.int64, copy=False)
    return ConfusionMatrix(counts=counts, class_names=names)


def _default_names(num_classes: int) -> tuple[str, ...]:
    if num_classes == len(CLASS_NAMES):
        return CLASS_NAMES
    return tuple(f"class_{index}" for index in range(num_classes))


def _ratio(numerator: int | float, denominator: int | float) -> tuple[float, bool]:
    if denominator == 0:
        return 0.0, False
    return numerator / denominator, True


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def class_metrics(cm: ConfusionMatrix, cls: int) -> ClassMetrics:
    """One-vs-rest counts for ``cls`` and the four metrics derived from them."""
    if not 0 <= cls < cm.num_classes:
        raise RangeError(f"class {cls} out of range for {cm.num_classes} classes")
    tp = int(cm.counts[cls, cls])
    fp = int(cm.counts[:, cls].sum()) - tp
    fn = int(cm.counts[cls, :].sum()) - tp
    tn = cm.total - tp - fp - fn

    undefined: list[str] = []
    accuracy, ok = _ratio(tp + tn, tp + tn + fp + fn)
    if not ok:
        undefined.append("accuracy")
    precision, ok = _ratio(tp, tp + fp)
    if not ok:
        undefined.append("precision")
    recall, ok = _ratio(tp, tp + fn)
    if not ok:
        undefined.append("recall")
    if precision + recall == 0:
        undefined.append("f1")
    return ClassMetrics(
        name=cm.class_names[cls],
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        undefined=tuple(undefined),
    )


def report(cm: ConfusionMatrix) -> MetricsReport:
    classes = [class_metrics(cm, index) for index in range(cm.num_classes)]
    macro = {
        key: float(np.mean([getattr(item, key) for item in classes]))
        for key in ("accuracy", "precision", "recall", "f1")
    }
    micro_accuracy, _ = _ratio(cm.trace(), cm.total)
    return MetricsReport(
        classes=classes,
        macro=macro,
        micro_accuracy=micro_accuracy,
        confusion=cm,
    )
