"""Forward and backward passes for every layer type the classifier uses.

All functions are pure over their array arguments apart from
``batchnorm_forward`` in train mode, which updates the running statistics
held by its ``BatchNormState``. Arrays are channels-last (``[N, H, W, C]``);
the dtype of the input is preserved so the same code runs in 64-bit for
gradient checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from guardnet.core.tensor import Tensor, elementwise, ensure_finite, matmul, reduce
from guardnet.errors import ConfigError, NumericError, RangeError, ShapeError

Activation = Literal["relu6", "relu", "linear"]
Padding = Literal["same", "valid"]
Mode = Literal["train", "eval"]
Reduction = Literal["mean", "sum"]

LOG_PROB_FLOOR = 1e-12


@dataclass(slots=True)
class LayerGrad:
    d_input: Tensor
    d_params: list[tuple[str, Tensor]] = field(default_factory=list)

    def param(self, name: str) -> Tensor:
        for key, grad in self.d_params:
            if key == name:
                return grad
        raise KeyError(name)


@dataclass(frozen=True, slots=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel: tuple[int, int] = (3, 3)
    stride: tuple[int, int] = (1, 1)
    padding: Padding = "same"
    depthwise: bool = False

    def __post_init__(self) -> None:
        if self.in_channels < 1 or self.out_channels < 1:
            raise ShapeError(
                f"channels must be positive, got in={self.in_channels} out={self.out_channels}"
            )
        if min(self.kernel) < 1 or min(self.stride) < 1:
            raise ShapeError(f"bad kernel {self.kernel} or stride {self.stride}")
        if self.padding not in ("same", "valid"):
            raise ShapeError(f"unknown padding '{self.padding}'")
        if self.depthwise and self.out_channels % self.in_channels != 0:
            raise ShapeError(
                f"depthwise conv needs out_channels ({self.out_channels}) to be a "
                f"multiple of in_channels ({self.in_channels})"
            )

    @property
    def multiplier(self) -> int:
        return self.out_channels // self.in_channels if self.depthwise else 1

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        kh, kw = self.kernel
        if self.depthwise:
            return (kh, kw, self.in_channels, self.multiplier)
        return (kh, kw, self.in_channels, self.out_channels)

    @property
    def fan_in(self) -> int:
        kh, kw = self.kernel
        return kh * kw * (1 if self.depthwise else self.in_channels)

    def output_size(self, height: int, width: int) -> tuple[int, int]:
        sizes = []
        for size, k, s in zip((height, width), self.kernel, self.stride):
            if self.padding == "same":
                out = math.ceil(size / s)
            else:
                out = (size - k) // s + 1
            if out < 1:
                raise ShapeError(
                    f"input {height}x{width} too small for kernel {self.kernel} "
                    f"with {self.padding} padding"
                )
            sizes.append(out)
        return sizes[0], sizes[1]

    def pads(self, height: int, width: int) -> tuple[tuple[int, int], tuple[int, int]]:
        if self.padding == "valid":
            return (0, 0), (0, 0)
        out_h, out_w = self.output_size(height, width)
        pads = []
        for size, out, k, s in zip((height, width), (out_h, out_w), self.kernel, self.stride):
            total = max((out - 1) * s + k - size, 0)
            pads.append((total // 2, total - total // 2))
        return pads[0], pads[1]


@dataclass(slots=True)
class BatchNormState:
    gamma: Tensor
    beta: Tensor
    running_mean: Tensor
    running_var: Tensor
    momentum: float = 0.1
    epsilon: float = 1e-5

    def __post_init__(self) -> None:
        channels = self.gamma.shape
        for name in ("beta", "running_mean", "running_var"):
            if getattr(self, name).shape != channels:
                raise ShapeError(f"batch norm {name} shape differs from gamma {list(channels)}")
        if not 0.0 < self.momentum < 1.0:
            raise RangeError(f"momentum must be in (0,1), got {self.momentum}")
        if self.epsilon <= 0:
            raise RangeError(f"epsilon must be positive, got {self.epsilon}")
        if np.any(self.running_var < 0):
            raise RangeError("running_var must be non-negative")

    @classmethod
    def create(
        cls,
        channels: int,
        *,
        momentum: float = 0.1,
        epsilon: float = 1e-5,
        dtype: np.dtype | type = np.float32,
    ) -> "BatchNormState":
        return cls(
            gamma=np.ones(channels, dtype=dtype),
            beta=np.zeros(channels, dtype=dtype),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
            momentum=momentum,
            epsilon=epsilon,
        )

    @property
    def channels(self) -> int:
        return int(self.gamma.shape[0])


def apply_activation(z: Tensor, activation: Activation) -> Tensor:
    if activation == "linear":
        return z
    if activation == "relu":
        return np.maximum(z, 0)
    if activation == "relu6":
        return np.clip(z, 0, 6)
    raise ValueError(f"unknown activation '{activation}'")


def activation_grad(z: Tensor, activation: Activation) -> Tensor:
    if activation == "linear":
        return np.ones_like(z)
    if activation == "relu":
        return (z > 0).astype(z.dtype)
    if activation == "relu6":
        return ((z > 0) & (z < 6)).astype(z.dtype)
    raise ValueError(f"unknown activation '{activation}'")


def _check_conv_inputs(x: Tensor, spec: ConvSpec, W: Tensor) -> None:
    if x.ndim != 4 or x.shape[3] != spec.in_channels:
        raise ShapeError(
            f"conv input {list(x.shape)} does not match [N,H,W,{spec.in_channels}]"
        )
    if W.shape != spec.weight_shape:
        raise ShapeError(f"conv weight {list(W.shape)} != expected {list(spec.weight_shape)}")


def _pad_and_patch(x: Tensor, spec: ConvSpec) -> tuple[Tensor, Tensor, tuple[int, int]]:
    n, h, w, c = x.shape
    (pt, pb), (pl, pr) = spec.pads(h, w)
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    out_h, out_w = spec.output_size(h, w)
    sh, sw = spec.stride
    windows = sliding_window_view(xp, spec.kernel, axis=(1, 2))
    # [N, out_h, out_w, C, kh, kw]
    patches = windows[:, ::sh, ::sw][:, :out_h, :out_w]
    return xp, patches, (out_h, out_w)


def _conv_linear(x: Tensor, spec: ConvSpec, W: Tensor) -> Tensor:
    _xp, patches, (out_h, out_w) = _pad_and_patch(x, spec)
    if not spec.depthwise:
        return np.tensordot(patches, W, axes=([4, 5, 3], [0, 1, 2]))
    n, c = x.shape[0], x.shape[3]
    out = np.zeros((n, out_h, out_w, c, spec.multiplier), dtype=np.result_type(x, W))
    kh, kw = spec.kernel
    for i in range(kh):
        for j in range(kw):
            out += patches[..., i, j][..., None] * W[i, j]
    return out.reshape(n, out_h, out_w, c * spec.multiplier)


def conv2d_forward(
    x: Tensor,
    spec: ConvSpec,
    W: Tensor,
    b: Tensor,
    activation: Activation = "linear",
) -> Tensor:
    """``activation(conv(x, W) + b)``; depthwise output channel ``c*m + k``."""
    _check_conv_inputs(x, spec, W)
    if b.shape != (spec.out_channels,):
        raise ShapeError(f"conv bias {list(b.shape)} != [{spec.out_channels}]")
    return apply_activation(_conv_linear(x, spec, W) + b, activation)


def conv2d_backward(
    x: Tensor,
    spec: ConvSpec,
    W: Tensor,
    upstream: Tensor,
    *,
    b: Tensor | None = None,
    activation: Activation = "linear",
) -> LayerGrad:
    """Gradients of ``sum(upstream * conv2d_forward(...))`` w.r.t. x, W and b."""
    _check_conv_inputs(x, spec, W)
    n, h, w, c = x.shape
    xp, patches, (out_h, out_w) = _pad_and_patch(x, spec)
    expected = (n, out_h, out_w, spec.out_channels)
    if upstream.shape != expected:
        raise ShapeError(f"upstream {list(upstream.shape)} != forward output {list(expected)}")

    g = upstream
    if activation != "linear":
        bias = b if b is not None else np.zeros(spec.out_channels, dtype=x.dtype)
        g = upstream * activation_grad(_conv_linear(x, spec, W) + bias, activation)

    d_b = g.sum(axis=(0, 1, 2))
    dxp = np.zeros_like(xp, dtype=np.result_type(x, W, g))
    kh, kw = spec.kernel
    sh, sw = spec.stride
    rows = sh * (out_h - 1) + 1
    cols = sw * (out_w - 1) + 1

    if spec.depthwise:
        g5 = g.reshape(n, out_h, out_w, c, spec.multiplier)
        d_W = np.zeros_like(W, dtype=dxp.dtype)
        for i in range(kh):
            for j in range(kw):
                d_W[i, j] = (patches[..., i, j][..., None] * g5).sum(axis=(0, 1, 2))
                dxp[:, i : i + rows : sh, j : j + cols : sw, :] += (g5 * W[i, j]).sum(axis=-1)
    else:
        d_W = np.tensordot(patches, g, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
        # [N, out_h, out_w, kh, kw, C]
        d_patches = np.tensordot(g, W, axes=([3], [3]))
        for i in range(kh):
            for j in range(kw):
                dxp[:, i : i + rows : sh, j : j + cols : sw, :] += d_patches[:, :, :, i, j, :]

    (pt, _pb), (pl, _pr) = spec.pads(h, w)
    d_x = dxp[:, pt : pt + h, pl : pl + w, :]
    return LayerGrad(d_input=d_x, d_params=[("W", d_W), ("b", d_b)])


def _check_bn(x: Tensor, state: BatchNormState) -> tuple[int, ...]:
    if x.ndim < 2 or x.shape[-1] != state.channels:
        raise ShapeError(
            f"batch norm input {list(x.shape)} has {x.shape[-1] if x.ndim else 0} "
            f"channels, state has {state.channels}"
        )
    return tuple(range(x.ndim - 1))


def batchnorm_forward(x: Tensor, state: BatchNormState, mode: Mode = "train") -> Tensor:
    axes = _check_bn(x, state)
    if mode == "eval":
        std = np.sqrt(state.running_var + state.epsilon)
        return state.gamma * (x - state.running_mean) / std + state.beta
    if mode != "train":
        raise ValueError(f"unknown batch norm mode '{mode}'")
    mean = x.mean(axis=axes)
    var = x.var(axis=axes)
    y = state.gamma * (x - mean) / np.sqrt(var + state.epsilon) + state.beta
    m = state.momentum
    state.running_mean[...] = (1 - m) * state.running_mean + m * mean
    state.running_var[...] = (1 - m) * state.running_var + m * var
    return y


def batchnorm_backward(
    x: Tensor,
    state: BatchNormState,
    upstream: Tensor,
    mode: Mode = "train",
) -> LayerGrad:
    axes = _check_bn(x, state)
    if upstream.shape != x.shape:
        raise ShapeError(f"upstream {list(upstream.shape)} != input {list(x.shape)}")
    if mode == "eval":
        std = np.sqrt(state.running_var + state.epsilon)
        x_hat = (x - state.running_mean) / std
        d_x = upstream * state.gamma / std
    else:
        count = math.prod(x.shape[axis] for axis in axes)
        mean = x.mean(axis=axes)
        std = np.sqrt(x.var(axis=axes) + state.epsilon)
        x_hat = (x - mean) / std
        d_x_hat = upstream * state.gamma
        sum_d = d_x_hat.sum(axis=axes)
        sum_dx = (d_x_hat * x_hat).sum(axis=axes)
        d_x = (count * d_x_hat - sum_d - x_hat * sum_dx) / (count * std)
    d_gamma = (upstream * x_hat).sum(axis=axes)
    d_beta = upstream.sum(axis=axes)
    return LayerGrad(d_input=d_x, d_params=[("gamma", d_gamma), ("beta", d_beta)])


def _check_dense(x: Tensor, W: Tensor) -> None:
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeError(f"dense input {list(x.shape)} incompatible with weight {list(W.shape)}")


def dense_forward(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    _check_dense(x, W)
    if b.shape != (W.shape[1],):
        raise ShapeError(f"dense bias {list(b.shape)} != [{W.shape[1]}]")
    return elementwise("add", matmul(x, W), b)


def dense_backward(x: Tensor, W: Tensor, upstream: Tensor) -> LayerGrad:
    _check_dense(x, W)
    if upstream.shape != (x.shape[0], W.shape[1]):
        raise ShapeError(
            f"upstream {list(upstream.shape)} != dense output [{x.shape[0]},{W.shape[1]}]"
        )
    d_W = matmul(x.T, upstream)
    d_b = reduce("sum", upstream, axis=0)
    d_x = matmul(upstream, W.T)
    return LayerGrad(d_input=d_x, d_params=[("W", d_W), ("b", d_b)])


def softmax(z: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction."""
    if z.ndim != 2 or z.shape[1] < 2:
        raise ShapeError(f"softmax needs [N,K] with K >= 2, got {list(z.shape)}")
    if not np.all(np.isfinite(z)):
        raise NumericError("softmax input contains NaN or Inf")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(
    probs: Tensor,
    onehot: Tensor,
    reduction: Reduction = "mean",
) -> tuple[float, Tensor]:
    """Categorical cross-entropy and its fused softmax gradient w.r.t. the logits."""
    if probs.shape != onehot.shape or probs.ndim != 2:
        raise ShapeError(
            f"probs {list(probs.shape)} and one-hot {list(onehot.shape)} must be equal [N,K]"
        )
    valid = np.all((onehot == 0) | (onehot == 1)) and np.all(onehot.sum(axis=1) == 1)
    if not valid:
        raise RangeError("labels are not valid one-hot rows")
    n = probs.shape[0]
    p_true = np.maximum((probs * onehot).sum(axis=1), LOG_PROB_FLOOR)
    losses = -np.log(p_true)
    diff = probs - onehot
    if reduction == "sum":
        return float(losses.sum()), diff
    if reduction != "mean":
        raise ConfigError(f"unknown reduction '{reduction}'")
    return float(losses.mean()), diff / n


def softmax_cross_entropy(
    logits: Tensor,
    onehot: Tensor,
    reduction: Reduction = "mean",
) -> tuple[float, Tensor, Tensor]:
    probs = softmax(logits)
    loss, d_logits = cross_entropy(probs, onehot, reduction)
    ensure_finite(d_logits, "loss gradient")
    return loss, d_logits, probs
