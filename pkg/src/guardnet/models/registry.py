from __future__ import annotations

from dataclasses import dataclass

from guardnet.errors import ConfigError


@dataclass(frozen=True, slots=True)
class InvertedResidualSpec:
    expansion: int
    out_channels: int
    repeat: int
    stride: int

    def __post_init__(self) -> None:
        if self.expansion < 1 or self.out_channels < 1 or self.repeat < 1:
            raise ConfigError(f"invalid inverted residual spec {self}")
        if self.stride not in (1, 2):
            raise ConfigError(f"inverted residual stride must be 1 or 2, got {self.stride}")


@dataclass(frozen=True, slots=True)
class VariantTable:
    input_size: int
    stem_channels: int
    blocks: tuple[InvertedResidualSpec, ...]
    last_channels: int


_VARIANTS: dict[str, VariantTable] = {}


def register_variant(name: str, table: VariantTable) -> None:
    key = name.lower()
    if key in _VARIANTS:
        raise ValueError(f"Variant '{name}' is already registered")
    _VARIANTS[key] = table


def get_variant(name: str) -> VariantTable:
    table = _VARIANTS.get(name.lower())
    if table is None:
        available = ", ".join(list_variants())
        raise ConfigError(f"Unknown variant '{name}'. Available variants: {available}")
    return table


def list_variants() -> list[str]:
    return sorted(_VARIANTS)


# t, c, n, s rows of the standard MobileNetV2 table.
register_variant(
    "mobilenetv2-224",
    VariantTable(
        input_size=224,
        stem_channels=32,
        blocks=(
            InvertedResidualSpec(1, 16, 1, 1),
            InvertedResidualSpec(6, 24, 2, 2),
            InvertedResidualSpec(6, 32, 3, 2),
            InvertedResidualSpec(6, 64, 4, 2),
            InvertedResidualSpec(6, 96, 3, 1),
            InvertedResidualSpec(6, 160, 3, 2),
            InvertedResidualSpec(6, 320, 1, 1),
        ),
        last_channels=1280,
    ),
)

# Desk-scale miniature: 32x32 input, 3 stages, 24,243 trainable parameters
# with the default 128-unit hidden head and 3 classes.
register_variant(
    "micronet-32",
    VariantTable(
        input_size=32,
        stem_channels=8,
        blocks=(
            InvertedResidualSpec(1, 8, 1, 1),
            InvertedResidualSpec(4, 16, 2, 2),
            InvertedResidualSpec(4, 24, 2, 2),
        ),
        last_channels=64,
    ),
)
