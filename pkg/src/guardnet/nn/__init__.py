"""Layer forward/backward passes and the classification loss."""

from .functional import (
    BatchNormState,
    ConvSpec,
    LayerGrad,
    activation_grad,
    apply_activation,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    softmax,
    softmax_cross_entropy,
)

__all__ = [
    "BatchNormState",
    "ConvSpec",
    "LayerGrad",
    "activation_grad",
    "apply_activation",
    "batchnorm_backward",
    "batchnorm_forward",
    "conv2d_backward",
    "conv2d_forward",
    "cross_entropy",
    "dense_backward",
    "dense_forward",
    "softmax",
    "softmax_cross_entropy",
]
