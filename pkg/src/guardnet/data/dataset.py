from __future__ import annotations

import logging
import queue
import threading
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from guardnet import CLASS_NAMES
from guardnet.data.ppm import read_ppm
from guardnet.data.transforms import (
    AugmentConfig,
    augment_image,
    normalize,
    resize_bilinear,
    sample_rng,
)
from guardnet.errors import ConfigError, DatasetError, FormatError, RangeError

logger = logging.getLogger(__name__)

Batch = tuple[np.ndarray, np.ndarray]


@dataclass(slots=True)
class Sample:
    image: np.ndarray
    label: int
    source: Path | None = None

    def __post_init__(self) -> None:
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise RangeError(f"sample image must be [H,W,3], got {list(self.image.shape)}")
        if self.label < 0:
            raise RangeError(f"label must be >= 0, got {self.label}")


@dataclass(slots=True)
class Dataset:
    samples: list[Sample]
    class_names: tuple[str, ...] = CLASS_NAMES
    errors: list[tuple[Path, FormatError]] = field(default_factory=list)

    def __post_init__(self) -> None:
        for sample in self.samples:
            if sample.label >= len(self.class_names):
                raise RangeError(
                    f"label {sample.label} out of range for {len(self.class_names)} classes"
                )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def labels(self) -> list[int]:
        return [sample.label for sample in self.samples]

    def counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.class_names}
        for sample in self.samples:
            counts[self.class_names[sample.label]] += 1
        return counts

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset([self.samples[i] for i in indices], self.class_names)

    def resized(self, size: tuple[int, int]) -> "Dataset":
        samples = [
            sample
            if sample.image.shape[:2] == size
            else replace(sample, image=resize_bilinear(sample.image, size))
            for sample in self.samples
        ]
        return Dataset(samples, self.class_names, list(self.errors))


@dataclass(frozen=True, slots=True)
class SplitConfig:
    train_fraction: float = 0.7
    val_fraction: float = 0.15
    test_fraction: float = 0.15
    seed: int = 0

    def validate(self) -> "SplitConfig":
        fractions = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not 0.0 <= value <= 1.0 for value in fractions):
            raise ConfigError(f"split fractions must lie in [0,1], got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)}")
        return self


def load_dataset(
    root: Path,
    *,
    class_names: Sequence[str] = CLASS_NAMES,
    image_size: tuple[int, int] | None = None,
) -> Dataset:
    """Read ``root/<class>/*.ppm``; malformed files are recorded and skipped."""
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    samples: list[Sample] = []
    errors: list[tuple[Path, FormatError]] = []
    for label, name in enumerate(class_names):
        class_dir = root / name
        if not class_dir.is_dir():
            raise DatasetError(f"missing class directory '{name}' under {root}")
        loaded = 0
        for path in sorted(class_dir.iterdir()):
            if not path.is_file() or path.suffix.lower() != ".ppm":
                logger.warning("skipping non-image file %s", path)
                continue
            try:
                pixels = read_ppm(path)
            except FormatError as exc:
                logger.warning("skipping malformed image: %s", exc)
                errors.append((path, exc))
                continue
            image = pixels.astype(np.float32)
            if image_size is not None and image.shape[:2] != tuple(image_size):
                image = resize_bilinear(image, image_size)
            samples.append(Sample(image=image, label=label, source=path))
            loaded += 1
        if loaded == 0:
            raise DatasetError(f"class '{name}' has no readable images in {class_dir}")
    dataset = Dataset(samples, tuple(class_names), errors)
    logger.info("loaded %d images from %s: %s", len(dataset), root, dataset.counts())
    return dataset


def one_hot(label: int, num_classes: int) -> np.ndarray:
    if not 0 <= label < num_classes:
        raise RangeError(f"label {label} out of range for {num_classes} classes")
    vector = np.zeros(num_classes, dtype=np.float32)
    vector[label] = 1.0
    return vector


def split_dataset(dataset: Dataset, config: SplitConfig) -> tuple[Dataset, Dataset, Dataset]:
    """Stratified train/val/test split; each class follows the global fractions to +-1."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    labels = np.asarray(dataset.labels(), dtype=np.int64)
    for label in range(dataset.num_classes):
        members = np.flatnonzero(labels == label)
        members = members[rng.permutation(members.size)]
        n_train = round(members.size * config.train_fraction)
        n_val = min(round(members.size * config.val_fraction), members.size - n_train)
        parts[0].extend(members[:n_train].tolist())
        parts[1].extend(members[n_train : n_train + n_val].tolist())
        parts[2].extend(members[n_train + n_val :].tolist())
    return tuple(dataset.subset(sorted(part)) for part in parts)


def _build_batch(
    dataset: Dataset,
    indices: np.ndarray,
    epoch: int,
    image_size: tuple[int, int] | None,
    augmentation: AugmentConfig | None,
) -> Batch:
    images = []
    labels = []
    for index in indices:
        sample = dataset.samples[index]
        image = sample.image
        if image_size is not None and image.shape[:2] != tuple(image_size):
            image = resize_bilinear(image, image_size)
        if augmentation is not None:
            rng = sample_rng(augmentation.seed, epoch, int(index))
            image = augment_image(image, augmentation, rng)
        images.append(normalize(image))
        labels.append(one_hot(sample.label, dataset.num_classes))
    return np.stack(images), np.stack(labels)


def _generate(
    dataset: Dataset,
    batch_size: int,
    order: np.ndarray,
    epoch: int,
    image_size: tuple[int, int] | None,
    augmentation: AugmentConfig | None,
) -> Iterator[Batch]:
    for start in range(0, order.size, batch_size):
        indices = order[start : start + batch_size]
        yield _build_batch(dataset, indices, epoch, image_size, augmentation)


_DONE = object()


def _prefetched(source: Iterator[Batch], depth: int) -> Iterator[Batch]:
    slots: queue.Queue = queue.Queue(maxsize=depth)
    stop = threading.Event()

    def offer(item: object) -> bool:
        while not stop.is_set():
            try:
                slots.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def produce() -> None:
        try:
            for item in source:
                if not offer(item):
                    return
            offer(_DONE)
        except BaseException as exc:
            offer(exc)

    worker = threading.Thread(target=produce, name="guardnet-prefetch", daemon=True)
    worker.start()
    try:
        while True:
            item = slots.get()
            if item is _DONE:
                return
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
        worker.join(timeout=1.0)


def batches(
    dataset: Dataset,
    batch_size: int,
    shuffle_seed: int,
    *,
    epoch: int = 0,
    shuffle: bool = True,
    image_size: tuple[int, int] | None = None,
    augment: AugmentConfig | None = None,
    prefetch: int = 0,
) -> Iterator[Batch]:
    """Normalized ``[N,H,W,3]`` images with one-hot ``[N,K]`` labels; last batch may be short."""
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if len(dataset) == 0:
        return iter(())
    if shuffle:
        order = np.random.default_rng([shuffle_seed, epoch]).permutation(len(dataset))
    else:
        order = np.arange(len(dataset))
    source = _generate(dataset, batch_size, order, epoch, image_size, augment)
    if prefetch > 0:
        return _prefetched(source, prefetch)
    return source


def augment(sample: Sample, config: AugmentConfig, rng: np.random.Generator) -> Sample:
    """Augmented copy of ``sample``; label and image dimensions are unchanged."""
    return replace(sample, image=augment_image(sample.image, config, rng))
