"""Parameter update rules."""

from .optimizers import (
    SGD,
    Adam,
    AdamState,
    Optimizer,
    adam_step,
    get_optimizer,
    list_optimizers,
    sgd_step,
)

__all__ = [
    "SGD",
    "Adam",
    "AdamState",
    "Optimizer",
    "adam_step",
    "get_optimizer",
    "list_optimizers",
    "sgd_step",
]
