from .trainer import (
    EpochStats,
    TrainOptions,
    accuracy,
    evaluate_model,
    predict_labels,
    train_epoch,
    train_model,
)

__all__ = [
    "EpochStats",
    "TrainOptions",
    "accuracy",
    "evaluate_model",
    "predict_labels",
    "train_epoch",
    "train_model",
]
