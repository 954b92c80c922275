from __future__ import annotations

from collections.abc import Iterator

import numpy as np

from guardnet.core.tensor import Tensor
from guardnet.nn.functional import (
    Activation as ActivationKind,
    BatchNormState,
    ConvSpec,
    activation_grad,
    apply_activation,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
)


def he_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> Tensor:
    std = np.sqrt(2.0 / fan_in)
    return (rng.standard_normal(shape) * std).astype(np.float32)


class Layer:
    """Named node holding trainable ``params`` and non-trainable ``buffers``.

    ``forward(training=True)`` caches what ``backward`` needs; eval-mode
    forward touches no layer state, so a built model can serve concurrent
    readers.
    """

    def __init__(self, name: str) -> None:
        self.name = name
        self.params: dict[str, Tensor] = {}
        self.buffers: dict[str, Tensor] = {}
        self.grads: dict[str, Tensor] = {}
        self.trainable = True

    def children(self) -> list["Layer"]:
        return []

    def walk(self) -> Iterator["Layer"]:
        yield self
        for child in self.children():
            yield from child.walk()

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        raise NotImplementedError

    def backward(self, upstream: Tensor) -> Tensor:
        raise NotImplementedError


class Conv2D(Layer):
    def __init__(
        self,
        name: str,
        spec: ConvSpec,
        rng: np.random.Generator,
        *,
        activation: ActivationKind = "linear",
        use_bias: bool = True,
    ) -> None:
        super().__init__(name)
        self.spec = spec
        self.activation = activation
        self.use_bias = use_bias
        self.params["W"] = he_normal(rng, spec.weight_shape, spec.fan_in)
        self._zero_bias = np.zeros(spec.out_channels, dtype=np.float32)
        if use_bias:
            self.params["b"] = np.zeros(spec.out_channels, dtype=np.float32)
        self._x: Tensor | None = None

    @property
    def bias(self) -> Tensor:
        return self.params["b"] if self.use_bias else self._zero_bias

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if training:
            self._x = x
        return conv2d_forward(x, self.spec, self.params["W"], self.bias, self.activation)

    def backward(self, upstream: Tensor) -> Tensor:
        grad = conv2d_backward(
            self._x, self.spec, self.params["W"], upstream, b=self.bias, activation=self.activation
        )
        self.grads = {name: g for name, g in grad.d_params if name in self.params}
        return grad.d_input


class BatchNorm(Layer):
    """Per-channel batch norm; runs in eval mode while frozen, even when training."""

    def __init__(self, name: str, channels: int, *, momentum: float, epsilon: float) -> None:
        super().__init__(name)
        self.state = BatchNormState.create(channels, momentum=momentum, epsilon=epsilon)
        self.params["gamma"] = self.state.gamma
        self.params["beta"] = self.state.beta
        self.buffers["running_mean"] = self.state.running_mean
        self.buffers["running_var"] = self.state.running_var
        self._cache: tuple[Tensor, str] | None = None

    def _mode(self, training: bool) -> str:
        return "train" if training and self.trainable else "eval"

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        mode = self._mode(training)
        if training:
            self._cache = (x, mode)
        return batchnorm_forward(x, self.state, mode)

    def backward(self, upstream: Tensor) -> Tensor:
        x, mode = self._cache
        grad = batchnorm_backward(x, self.state, upstream, mode)
        self.grads = dict(grad.d_params)
        return grad.d_input


class Activation(Layer):
    def __init__(self, name: str, kind: ActivationKind) -> None:
        super().__init__(name)
        self.kind = kind
        self._x: Tensor | None = None

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if training:
            self._x = x
        return apply_activation(x, self.kind)

    def backward(self, upstream: Tensor) -> Tensor:
        return upstream * activation_grad(self._x, self.kind)


class Sequential(Layer):
    def __init__(self, name: str, layers: list[Layer]) -> None:
        super().__init__(name)
        self.layers = layers

    def children(self) -> list[Layer]:
        return list(self.layers)

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, upstream: Tensor) -> Tensor:
        for layer in reversed(self.layers):
            upstream = layer.backward(upstream)
        return upstream


def conv_bn(
    name: str,
    spec: ConvSpec,
    rng: np.random.Generator,
    activation: ActivationKind,
    *,
    momentum: float,
    epsilon: float,
) -> Sequential:
    layers: list[Layer] = [
        Conv2D(f"{name}.conv", spec, rng, use_bias=False),
        BatchNorm(f"{name}.bn", spec.out_channels, momentum=momentum, epsilon=epsilon),
    ]
    if activation != "linear":
        layers.append(Activation(f"{name}.act", activation))
    return Sequential(name, layers)


class InvertedResidual(Layer):
    """1x1 expand, 3x3 depthwise, 1x1 linear projection; skip iff stride 1 and equal channels."""

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        *,
        stride: int,
        expansion: int,
        rng: np.random.Generator,
        momentum: float,
        epsilon: float,
    ) -> None:
        super().__init__(name)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.use_residual = stride == 1 and in_channels == out_channels
        hidden = in_channels * expansion
        bn = {"momentum": momentum, "epsilon": epsilon}
        layers: list[Layer] = []
        if expansion != 1:
            layers.append(
                conv_bn(f"{name}.expand", ConvSpec(in_channels, hidden, (1, 1)), rng, "relu6", **bn)
            )
        layers.append(
            conv_bn(
                f"{name}.depthwise",
                ConvSpec(hidden, hidden, (3, 3), (stride, stride), "same", depthwise=True),
                rng,
                "relu6",
                **bn,
            )
        )
        layers.append(
            conv_bn(f"{name}.project", ConvSpec(hidden, out_channels, (1, 1)), rng, "linear", **bn)
        )
        self.body = Sequential(f"{name}.body", layers)

    def children(self) -> list[Layer]:
        return [self.body]

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        y = self.body.forward(x, training)
        return x + y if self.use_residual else y

    def backward(self, upstream: Tensor) -> Tensor:
        d_x = self.body.backward(upstream)
        return d_x + upstream if self.use_residual else d_x


class GlobalAvgPool(Layer):
    def __init__(self, name: str) -> None:
        super().__init__(name)
        self._shape: tuple[int, ...] | None = None

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if training:
            self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, upstream: Tensor) -> Tensor:
        n, h, w, c = self._shape
        return np.broadcast_to(upstream[:, None, None, :] / (h * w), (n, h, w, c)).copy()


class Dense(Layer):
    def __init__(
        self,
        name: str,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
    ) -> None:
        super().__init__(name)
        self.params["W"] = he_normal(rng, (in_features, out_features), in_features)
        self.params["b"] = np.zeros(out_features, dtype=np.float32)
        self._x: Tensor | None = None

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if training:
            self._x = x
        return dense_forward(x, self.params["W"], self.params["b"])

    def backward(self, upstream: Tensor) -> Tensor:
        grad = dense_backward(self._x, self.params["W"], upstream)
        self.grads = dict(grad.d_params)
        return grad.d_input
