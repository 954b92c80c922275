from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from guardnet.errors import ConfigError, RangeError

NORMALIZE_DIVISOR = np.float32(127.0)
NORMALIZE_SHIFT = np.float32(1.0)


@dataclass(frozen=True, slots=True)
class AugmentConfig:
    rotation_deg: float = 15.0
    scale_range: tuple[float, float] = (0.9, 1.1)
    hflip_prob: float = 0.5
    seed: int = 0

    def validate(self) -> "AugmentConfig":
        low, high = self.scale_range
        if self.rotation_deg < 0:
            raise ConfigError(f"rotation_deg must be >= 0, got {self.rotation_deg}")
        if not 0 < low <= high:
            raise ConfigError(f"scale_range must satisfy 0 < min <= max, got {self.scale_range}")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ConfigError(f"hflip_prob must be in [0,1], got {self.hflip_prob}")
        if self.seed < 0:
            raise ConfigError(f"augment seed must be >= 0, got {self.seed}")
        return self

    @classmethod
    def identity(cls, seed: int = 0) -> "AugmentConfig":
        return cls(rotation_deg=0.0, scale_range=(1.0, 1.0), hflip_prob=0.0, seed=seed)


def resize_bilinear(image: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Corner-aligned bilinear resize of an ``[H, W, C]`` image.

    Output pixel ``i`` samples source row ``i * (H - 1) / (h - 1)``, so the
    four corners map onto each other exactly.
    """
    height, width = image.shape[:2]
    out_h, out_w = target
    if height < 1 or width < 1 or out_h < 1 or out_w < 1:
        raise RangeError(f"cannot resize {height}x{width} to {out_h}x{out_w}")
    source = np.asarray(image, dtype=np.float64)

    def coords(size: int, out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if out == 1:
            pos = np.array([(size - 1) / 2.0])
        else:
            pos = np.linspace(0.0, size - 1, out)
        low = np.floor(pos).astype(np.int64)
        high = np.minimum(low + 1, size - 1)
        return low, high, pos - low

    y0, y1, wy = coords(height, out_h)
    x0, x1, wx = coords(width, out_w)
    wy = wy[:, None, None]
    wx = wx[None, :, None]
    top = source[y0][:, x0] * (1 - wx) + source[y0][:, x1] * wx
    bottom = source[y1][:, x0] * (1 - wx) + source[y1][:, x1] * wx
    return (top * (1 - wy) + bottom * wy).astype(np.float32)


def normalize(image: np.ndarray) -> np.ndarray:
    """``X / 127.0 - 1`` in float32; maps [0, 255] onto [-1, 1.0079]."""
    pixels = np.asarray(image, dtype=np.float32)
    if not np.all(np.isfinite(pixels)) or pixels.min() < 0 or pixels.max() > 255:
        raise RangeError("pixel values must lie in [0, 255] before normalization")
    return pixels / NORMALIZE_DIVISOR - NORMALIZE_SHIFT


def denormalize(tensor: np.ndarray) -> np.ndarray:
    return (np.asarray(tensor, dtype=np.float32) + NORMALIZE_SHIFT) * NORMALIZE_DIVISOR


def hflip(image: np.ndarray) -> np.ndarray:
    return image[:, ::-1].copy()


def sample_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Stream for one sample in one epoch, independent of visiting order."""
    return np.random.default_rng([seed, epoch, index])


def _rotate_scale(image: np.ndarray, angle_deg: float, scale: float) -> np.ndarray:
    theta = math.radians(angle_deg)
    cos, sin = math.cos(theta), math.sin(theta)
    spatial = np.array([[cos, sin], [-sin, cos]]) / scale
    center = (np.array(image.shape[:2], dtype=np.float64) - 1) / 2.0
    matrix = np.eye(3)
    matrix[:2, :2] = spatial
    offset = np.zeros(3)
    offset[:2] = center - spatial @ center
    warped = ndimage.affine_transform(
        np.asarray(image, dtype=np.float64),
        matrix,
        offset=offset,
        order=1,
        mode="nearest",
    )
    return np.clip(warped, 0, 255).astype(np.float32)


def augment_image(
    image: np.ndarray,
    config: AugmentConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Rotate and scale about the centre (edge padding), then maybe flip horizontally."""
    angle = rng.uniform(-config.rotation_deg, config.rotation_deg)
    scale = rng.uniform(*config.scale_range)
    flip = rng.random() < config.hflip_prob
    out = np.asarray(image, dtype=np.float32)
    if angle != 0.0 or scale != 1.0:
        out = _rotate_scale(out, angle, scale)
    if flip:
        out = hflip(out)
    return out
