"""Per-command settings.

Precedence, lowest first: dataclass defaults, the INI file given with
``--config`` (``[DEFAULT]`` shared, then ``[<command>]``), the
``GUARDNET_SEED`` environment variable, command-line flags.
"""

from __future__ import annotations

import configparser
import os
import types
import typing
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from guardnet.analysis.bench import MIN_TIMED_FRAMES
from guardnet.data.transforms import AugmentConfig
from guardnet.errors import ConfigError
from guardnet.models.mobilenet import ModelConfig
from guardnet.models.registry import list_variants
from guardnet.optim.optimizers import list_optimizers

SEED_ENV = "GUARDNET_SEED"
LOG_LEVEL_ENV = "GUARDNET_LOG_LEVEL"
SYNTHETIC_SOURCE = "synthetic"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _env_str(name: str, default: str) -> str:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    return raw.strip()


def log_level_name() -> str:
    return _env_str(LOG_LEVEL_ENV, "WARNING").upper()


def _env_int(name: str, default: int | None = None) -> int | None:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc


@dataclass(frozen=True, slots=True)
class ModelSettings:
    seed: int = 0
    variant: str = "mobilenetv2-224"
    head_hidden: int = 128
    width_multiplier: float = 1.0

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            variant=self.variant,
            head_hidden=self.head_hidden,
            width_multiplier=self.width_multiplier,
            seed=self.seed,
        )

    def _check_model(self) -> None:
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.variant not in list_variants():
            raise ConfigError(
                f"unknown variant '{self.variant}', expected one of {', '.join(list_variants())}"
            )
        self.model_config().validate()


def _require(value: Any, name: str) -> None:
    if value is None:
        raise ConfigError(f"'{name}' is required")


def _check_positive(value: int, name: str) -> None:
    if value < 1:
        raise ConfigError(f"{name} must be >= 1, got {value}")


@dataclass(frozen=True, slots=True)
class TrainConfig(ModelSettings):
    dataset: Path | None = None
    out: Path = Path("guardnet.sdlw")
    epochs: int = 50
    batch_size: int = 16
    lr: float = 0.001
    optimizer: str = "adam"
    val_fraction: float = 0.15
    augment: bool = True
    rotation_deg: float = 15.0
    scale_min: float = 0.9
    scale_max: float = 1.1
    hflip_prob: float = 0.5
    freeze_backbone: bool = False
    init_weights: Path | None = None
    prefetch: int = 0

    def augment_config(self) -> AugmentConfig | None:
        if not self.augment:
            return None
        return AugmentConfig(
            rotation_deg=self.rotation_deg,
            scale_range=(self.scale_min, self.scale_max),
            hflip_prob=self.hflip_prob,
            seed=self.seed,
        )

    def validate(self) -> "TrainConfig":
        self._check_model()
        _require(self.dataset, "dataset")
        _check_positive(self.epochs, "epochs")
        _check_positive(self.batch_size, "batch_size")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.optimizer.lower() not in list_optimizers():
            raise ConfigError(
                f"unknown optimizer '{self.optimizer}', "
                f"expected one of {', '.join(list_optimizers())}"
            )
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError(f"val_fraction must be in [0,1), got {self.val_fraction}")
        if self.prefetch < 0:
            raise ConfigError(f"prefetch must be >= 0, got {self.prefetch}")
        augment = self.augment_config()
        if augment is not None:
            augment.validate()
        return self


@dataclass(frozen=True, slots=True)
class EvalConfig(ModelSettings):
    weights: Path | None = None
    dataset: Path | None = None
    batch_size: int = 16
    out: Path | None = None

    def validate(self) -> "EvalConfig":
        self._check_model()
        _require(self.weights, "weights")
        _require(self.dataset, "dataset")
        _check_positive(self.batch_size, "batch_size")
        return self


@dataclass(frozen=True, slots=True)
class PredictConfig(ModelSettings):
    weights: Path | None = None
    image: Path | None = None
    out: Path | None = None

    def validate(self) -> "PredictConfig":
        self._check_model()
        _require(self.weights, "weights")
        _require(self.image, "image")
        return self


@dataclass(frozen=True, slots=True)
class BenchConfig(ModelSettings):
    weights: Path | None = None
    source: str = SYNTHETIC_SOURCE
    frames: int = 100
    warmup: int = 10
    out: Path | None = None

    def validate(self) -> "BenchConfig":
        self._check_model()
        if self.frames < MIN_TIMED_FRAMES:
            raise ConfigError(f"frames must be >= {MIN_TIMED_FRAMES}, got {self.frames}")
        if self.warmup < 0:
            raise ConfigError(f"warmup must be >= 0, got {self.warmup}")
        return self


@dataclass(frozen=True, slots=True)
class TTestConfig:
    file_a: Path | None = None
    file_b: Path | None = None
    tails: str = "two"
    alpha: float = 0.01
    label: str | None = None
    seed: int = 0
    out: Path | None = None

    def validate(self) -> "TTestConfig":
        _require(self.file_a, "file_a")
        _require(self.file_b, "file_b")
        if self.tails not in ("one", "two"):
            raise ConfigError(f"tails must be 'one' or 'two', got {self.tails!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0,1), got {self.alpha}")
        return self


CONFIG_TYPES: dict[str, type] = {
    "train": TrainConfig,
    "eval": EvalConfig,
    "predict": PredictConfig,
    "bench": BenchConfig,
    "ttest": TTestConfig,
}


def _unwrap_optional(hint: Any) -> Any:
    if isinstance(hint, types.UnionType) or typing.get_origin(hint) is typing.Union:
        args = [arg for arg in typing.get_args(hint) if arg is not type(None)]
        if len(args) == 1:
            return args[0]
    return hint


def _coerce(key: str, raw: str, hint: Any) -> Any:
    target = _unwrap_optional(hint)
    text = raw.strip()
    if target is bool:
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"'{key}' must be a boolean, got {raw!r}")
    try:
        if target is int:
            return int(text)
        if target is float:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"'{key}' must be a {target.__name__}, got {raw!r}") from exc
    if target is Path:
        return Path(text).expanduser()
    return text


def _read_ini(path: Path, command: str, cls: type) -> dict[str, Any]:
    parser = configparser.ConfigParser(
        default_section="guardnet:unused", interpolation=None
    )
    try:
        with path.open("r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        message = str(exc).splitlines()[0]
        raise ConfigError(f"invalid config {path}: {message}") from exc

    hints = typing.get_type_hints(cls)
    values: dict[str, Any] = {}
    if parser.has_section("DEFAULT"):
        for key, raw in parser.items("DEFAULT"):
            if key in hints:
                values[key] = _coerce(key, raw, hints[key])
    if parser.has_section(command):
        for key, raw in parser.items(command):
            if key not in hints:
                raise ConfigError(f"unknown key '{key}' in [{command}] of {path}")
            values[key] = _coerce(key, raw, hints[key])
    return values


def load_config(
    command: str,
    path: Path | None = None,
    overrides: Mapping[str, Any] | None = None,
):
    """Resolved and validated settings for ``command``."""
    cls = CONFIG_TYPES.get(command)
    if cls is None:
        raise ConfigError(f"unknown command '{command}'")
    values: dict[str, Any] = {}
    if path is not None:
        values.update(_read_ini(path, command, cls))
    seed = _env_int(SEED_ENV)
    if seed is not None:
        values["seed"] = seed
    known = {item.name for item in fields(cls)}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"'{key}' is not a {command} setting")
        values[key] = value
    return cls(**values).validate()
