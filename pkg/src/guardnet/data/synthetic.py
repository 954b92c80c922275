"""Class-separable synthetic frames for fixtures, overfit runs and benchmarks."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from pathlib import Path

import numpy as np

from guardnet import CLASS_NAMES
from guardnet.data.dataset import Dataset, Sample
from guardnet.data.ppm import write_ppm


def _pattern(label: int, size: int, rng: np.random.Generator) -> np.ndarray:
    ramp = np.linspace(0.0, 255.0, size)
    image = np.empty((size, size, 3))
    pattern = label % 3
    if pattern == 0:
        # warm horizontal gradient
        image[..., 0] = ramp[None, :]
        image[..., 1] = 90.0
        image[..., 2] = 40.0
    elif pattern == 1:
        # vertical stripes, period 8
        stripes = np.where((np.arange(size) // 4) % 2 == 0, 220.0, 35.0)
        image[...] = stripes[None, :, None]
    else:
        # dark blue-tinted background
        image[..., 0] = 25.0
        image[..., 1] = 30.0
        image[..., 2] = 70.0 + ramp[:, None] * 0.2
    image += rng.normal(0.0, 10.0, image.shape)
    return np.rint(np.clip(image, 0, 255)).astype(np.float32)


def make_synthetic_dataset(
    per_class: int = 10,
    size: int = 32,
    seed: int = 0,
    class_names: Sequence[str] = CLASS_NAMES,
) -> Dataset:
    rng = np.random.default_rng(seed)
    samples = [
        Sample(image=_pattern(label, size, rng), label=label)
        for label in range(len(class_names))
        for _ in range(per_class)
    ]
    return Dataset(samples, tuple(class_names))


def write_synthetic_dataset(
    root: Path,
    per_class: int = 10,
    size: int = 32,
    seed: int = 0,
    class_names: Sequence[str] = CLASS_NAMES,
) -> Path:
    """Write a ``root/<class>/<class>_NNN.ppm`` tree loadable by ``load_dataset``."""
    dataset = make_synthetic_dataset(per_class, size, seed, class_names)
    counters = {name: 0 for name in class_names}
    for sample in dataset.samples:
        name = class_names[sample.label]
        write_ppm(root / name / f"{name}_{counters[name]:03d}.ppm", sample.image.astype(np.uint8))
        counters[name] += 1
    return root


def synthetic_frames(size: int, seed: int = 0) -> Iterator[np.ndarray]:
    """Endless uniform-noise ``[size, size, 3]`` frames with values in [0, 255]."""
    rng = np.random.default_rng(seed)
    while True:
        yield rng.integers(0, 256, size=(size, size, 3)).astype(np.float32)
