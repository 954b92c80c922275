from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from guardnet.errors import ConfigError, ShapeError


@dataclass(slots=True)
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.lr}")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigError(f"betas must be in [0,1), got {self.beta1}, {self.beta2}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")


def _check_aligned(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> None:
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            raise ShapeError(f"no gradient for parameter '{name}'")
        if grad.shape != param.shape:
            raise ShapeError(
                f"gradient for '{name}' has shape {list(grad.shape)}, "
                f"parameter has {list(param.shape)}"
            )


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> Mapping[str, np.ndarray]:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    _check_aligned(params, grads)
    state.t += 1
    correction1 = 1.0 - state.beta1**state.t
    correction2 = 1.0 - state.beta2**state.t
    for name, param in params.items():
        grad = grads[name]
        m = state.m.setdefault(name, np.zeros_like(param))
        v = state.v.setdefault(name, np.zeros_like(param))
        m[...] = state.beta1 * m + (1.0 - state.beta1) * grad
        v[...] = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(param.dtype)
    return params


def sgd_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    lr: float,
) -> Mapping[str, np.ndarray]:
    _check_aligned(params, grads)
    for name, param in params.items():
        param -= (lr * grads[name]).astype(param.dtype)
    return params


class Optimizer(Protocol):
    def step(
        self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]
    ) -> Mapping[str, np.ndarray]:
        ...


@dataclass(slots=True)
class Adam:
    state: AdamState = field(default_factory=AdamState)

    def step(self, params, grads):
        return adam_step(params, grads, self.state)


@dataclass(slots=True)
class SGD:
    lr: float = 0.001

    def step(self, params, grads):
        return sgd_step(params, grads, self.lr)


def _adam_factory(lr: float = 0.001, **kwargs: Any) -> Adam:
    return Adam(AdamState(lr=lr, **kwargs))


def _sgd_factory(lr: float = 0.001, **_kwargs: Any) -> SGD:
    return SGD(lr=lr)


_OPTIMIZERS: dict[str, Callable[..., Optimizer]] = {
    "adam": _adam_factory,
    "sgd": _sgd_factory,
}


def get_optimizer(name: str, **kwargs: Any) -> Optimizer:
    factory = _OPTIMIZERS.get(name.lower())
    if factory is None:
        available = ", ".join(list_optimizers())
        raise ConfigError(f"Unknown optimizer '{name}'. Available optimizers: {available}")
    return factory(**kwargs)


def list_optimizers() -> list[str]:
    return sorted(_OPTIMIZERS)
