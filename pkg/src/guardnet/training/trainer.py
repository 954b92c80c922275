from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np

from guardnet.analysis.metrics import ConfusionMatrix, confusion_from_predictions
from guardnet.core.tensor import reduce
from guardnet.core.tracing import TraceWriter
from guardnet.data.dataset import Dataset, batches
from guardnet.data.transforms import AugmentConfig
from guardnet.errors import ConfigError, DatasetError
from guardnet.models.mobilenet import Model
from guardnet.nn.functional import softmax_cross_entropy
from guardnet.optim.optimizers import Optimizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "train_accuracy": self.train_accuracy,
            "val_accuracy": self.val_accuracy,
        }

    def format_line(self) -> str:
        val = "n/a" if self.val_accuracy is None else f"{self.val_accuracy:.4f}"
        return (
            f"epoch {self.epoch}: loss={self.train_loss:.6f} "
            f"train_acc={self.train_accuracy:.4f} val_acc={val}"
        )


@dataclass(frozen=True, slots=True)
class TrainOptions:
    epochs: int = 10
    batch_size: int = 16
    seed: int = 0
    augment: AugmentConfig | None = None
    prefetch: int = 0
    stop_at_accuracy: float | None = None

    def validate(self) -> "TrainOptions":
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.prefetch < 0:
            raise ConfigError(f"prefetch must be >= 0, got {self.prefetch}")
        if self.augment is not None:
            self.augment.validate()
        return self


def _image_size(model: Model) -> tuple[int, int]:
    height, width, _ = model.input_shape
    return height, width


def _correct(logits: np.ndarray, onehot: np.ndarray) -> int:
    predicted = reduce("argmax", logits, axis=1)
    actual = reduce("argmax", onehot, axis=1)
    return int(np.count_nonzero(predicted == actual))


def train_epoch(
    model: Model,
    dataset: Dataset,
    optimizer: Optimizer,
    options: TrainOptions,
    epoch: int,
) -> tuple[float, float]:
    """One pass over ``dataset``; returns (mean loss, train-mode accuracy)."""
    total_loss = 0.0
    correct = 0
    seen = 0
    for images, labels in batches(
        dataset,
        options.batch_size,
        options.seed,
        epoch=epoch,
        image_size=_image_size(model),
        augment=options.augment,
        prefetch=options.prefetch,
    ):
        logits = model.forward(images, training=True)
        loss, d_logits, _ = softmax_cross_entropy(logits, labels)
        grads = model.backward(d_logits)
        optimizer.step(model.trainable_parameters(), grads)
        count = images.shape[0]
        total_loss += loss * count
        correct += _correct(logits, labels)
        seen += count
    return total_loss / seen, correct / seen


def predict_labels(model: Model, dataset: Dataset, batch_size: int = 32) -> list[int]:
    predicted: list[int] = []
    for images, _ in batches(
        dataset, batch_size, 0, shuffle=False, image_size=_image_size(model)
    ):
        logits = model.forward(images, training=False)
        predicted.extend(int(value) for value in reduce("argmax", logits, axis=1))
    return predicted


def evaluate_model(model: Model, dataset: Dataset, batch_size: int = 32) -> ConfusionMatrix:
    predicted = predict_labels(model, dataset, batch_size)
    return confusion_from_predictions(
        dataset.labels(), predicted, dataset.num_classes, dataset.class_names
    )


def accuracy(model: Model, dataset: Dataset, batch_size: int = 32) -> float | None:
    if len(dataset) == 0:
        return None
    cm = evaluate_model(model, dataset, batch_size)
    return cm.trace() / cm.total


def train_model(
    model: Model,
    train_set: Dataset,
    optimizer: Optimizer,
    options: TrainOptions,
    *,
    val_set: Dataset | None = None,
    tracer: TraceWriter | None = None,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> list[EpochStats]:
    """Mini-batch training; stops early once train accuracy reaches ``stop_at_accuracy``."""
    options.validate()
    if len(train_set) == 0:
        raise DatasetError("training set is empty")
    if tracer is not None:
        tracer.emit(
            "train_start",
            variant=model.variant,
            samples=len(train_set),
            epochs=options.epochs,
            batch_size=options.batch_size,
            seed=options.seed,
            frozen=model.backbone_frozen,
        )
    history: list[EpochStats] = []
    for epoch in range(options.epochs):
        loss, train_acc = train_epoch(model, train_set, optimizer, options, epoch)
        val_acc = accuracy(model, val_set, options.batch_size) if val_set is not None else None
        stats = EpochStats(epoch + 1, float(loss), float(train_acc), val_acc)
        history.append(stats)
        logger.info(stats.format_line())
        if tracer is not None:
            tracer.emit("epoch", **stats.to_json())
        if on_epoch is not None:
            on_epoch(stats)
        if options.stop_at_accuracy is not None and train_acc >= options.stop_at_accuracy:
            logger.info("train accuracy %.4f reached target, stopping", train_acc)
            break
    return history
