"""MobileNetV2-style backbone plus a dense classifier head.

Backbone: 3x3 stride-2 stem, the variant's inverted-residual table, a 1x1
expansion to ``last_channels`` and global average pooling. Head: an optional
hidden dense layer with ReLU, then a dense layer producing the logits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from guardnet.core.tensor import Tensor, ensure_finite, reduce
from guardnet.errors import ConfigError, ShapeError
from guardnet.models.layers import (
    Activation,
    Dense,
    GlobalAvgPool,
    InvertedResidual,
    Layer,
    conv_bn,
)
from guardnet.models.registry import VariantTable, get_variant
from guardnet.nn.functional import ConvSpec, softmax

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class ModelConfig:
    variant: str = "mobilenetv2-224"
    num_classes: int = 3
    width_multiplier: float = 1.0
    head_hidden: int = 128
    seed: int = 0
    bn_momentum: float = 0.1
    bn_epsilon: float = 1e-5

    def validate(self) -> "ModelConfig":
        get_variant(self.variant)
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if not 0.0 < self.width_multiplier <= 1.0:
            raise ConfigError(f"width_multiplier must be in (0,1], got {self.width_multiplier}")
        if self.head_hidden < 0:
            raise ConfigError(f"head_hidden must be >= 0, got {self.head_hidden}")
        if not 0.0 < self.bn_momentum < 1.0 or self.bn_epsilon <= 0:
            raise ConfigError("bn_momentum must be in (0,1) and bn_epsilon positive")
        return self


def make_divisible(value: float, divisor: int = 8) -> int:
    rounded = max(divisor, int(value + divisor / 2) // divisor * divisor)
    if rounded < 0.9 * value:
        rounded += divisor
    return rounded


class Model:
    def __init__(
        self,
        config: ModelConfig,
        table: VariantTable,
        backbone: list[Layer],
        head: list[Layer],
    ) -> None:
        self.config = config
        self.table = table
        self.backbone = backbone
        self.head = head
        self.frozen: set[str] = set()

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (self.table.input_size, self.table.input_size, 3)

    @property
    def backbone_frozen(self) -> bool:
        return bool(self.frozen)

    def _walk(self, layers: list[Layer]):
        for layer in layers:
            yield from layer.walk()

    def named_parameters(self) -> dict[str, Tensor]:
        return {
            f"{layer.name}.{key}": value
            for layer in self._walk(self.backbone + self.head)
            for key, value in layer.params.items()
        }

    def backbone_parameter_names(self) -> list[str]:
        return [
            f"{layer.name}.{key}"
            for layer in self._walk(self.backbone)
            for key in layer.params
        ]

    def trainable_parameters(self) -> dict[str, Tensor]:
        return {
            name: value
            for name, value in self.named_parameters().items()
            if name not in self.frozen
        }

    def state_dict(self) -> dict[str, Tensor]:
        """Parameters and buffers in layer order; the set persisted by weights files."""
        state: dict[str, Tensor] = {}
        for layer in self._walk(self.backbone + self.head):
            for key, value in layer.params.items():
                state[f"{layer.name}.{key}"] = value
            for key, value in layer.buffers.items():
                state[f"{layer.name}.{key}"] = value
        return state

    def num_parameters(self, trainable_only: bool = False) -> int:
        params = self.trainable_parameters() if trainable_only else self.named_parameters()
        return sum(int(value.size) for value in params.values())

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise ShapeError(
                f"{self.variant} expects [N,{','.join(map(str, self.input_shape))}], "
                f"got {list(x.shape)}"
            )
        for layer in self.backbone + self.head:
            x = layer.forward(x, training)
        return ensure_finite(x, "logits")

    def backward(self, d_logits: Tensor) -> dict[str, Tensor]:
        """Backpropagate from the logits; the backbone is skipped while frozen."""
        visited = list(self.head)
        g = d_logits
        for layer in reversed(self.head):
            g = layer.backward(g)
        if not self.backbone_frozen:
            visited = self.backbone + visited
            for layer in reversed(self.backbone):
                g = layer.backward(g)
        return {
            f"{layer.name}.{key}": grad
            for layer in self._walk(visited)
            for key, grad in layer.grads.items()
        }


def build_model(config: ModelConfig) -> Model:
    config.validate()
    table = get_variant(config.variant)
    rng = np.random.default_rng(config.seed)
    width = config.width_multiplier
    bn = {"momentum": config.bn_momentum, "epsilon": config.bn_epsilon}

    channels = make_divisible(table.stem_channels * width)
    backbone: list[Layer] = [
        conv_bn("stem", ConvSpec(3, channels, (3, 3), (2, 2), "same"), rng, "relu6", **bn)
    ]
    index = 0
    for block in table.blocks:
        out_channels = make_divisible(block.out_channels * width)
        for repeat in range(block.repeat):
            backbone.append(
                InvertedResidual(
                    f"block{index}",
                    channels,
                    out_channels,
                    stride=block.stride if repeat == 0 else 1,
                    expansion=block.expansion,
                    rng=rng,
                    **bn,
                )
            )
            channels = out_channels
            index += 1
    last = make_divisible(table.last_channels * max(1.0, width))
    backbone.append(conv_bn("last", ConvSpec(channels, last, (1, 1)), rng, "relu6", **bn))
    backbone.append(GlobalAvgPool("pool"))

    head: list[Layer] = []
    features = last
    if config.head_hidden:
        head.append(Dense("head.hidden", features, config.head_hidden, rng))
        head.append(Activation("head.relu", "relu"))
        features = config.head_hidden
    head.append(Dense("head.logits", features, config.num_classes, rng))

    model = Model(config, table, backbone, head)
    logger.info(
        "built %s: %d parameters, %d classes",
        config.variant,
        model.num_parameters(),
        config.num_classes,
    )
    return model


def freeze_backbone(model: Model, frozen: bool = True) -> Model:
    """Mark every non-head parameter frozen (or thaw them all)."""
    model.frozen = set(model.backbone_parameter_names()) if frozen else set()
    for layer in model._walk(model.backbone):
        layer.trainable = not frozen
    return model


def predict(model: Model, image: Tensor) -> tuple[int, Tensor]:
    """Class index and probability vector for one normalized ``[H,W,3]`` image."""
    if image.shape != model.input_shape:
        raise ShapeError(
            f"{model.variant} expects an image of shape {list(model.input_shape)}, "
            f"got {list(image.shape)}"
        )
    logits = model.forward(np.asarray(image, dtype=np.float32)[None], training=False)
    probs = softmax(logits)[0]
    return int(reduce("argmax", probs, axis=0)), probs
