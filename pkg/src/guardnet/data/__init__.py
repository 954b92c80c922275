"""Image loading, preprocessing, augmentation and batching."""

from .dataset import (
    Dataset,
    Sample,
    SplitConfig,
    augment,
    batches,
    load_dataset,
    one_hot,
    split_dataset,
)
from .ppm import read_ppm, write_ppm
from .transforms import (
    AugmentConfig,
    augment_image,
    denormalize,
    hflip,
    normalize,
    resize_bilinear,
    sample_rng,
)

__all__ = [
    "AugmentConfig",
    "Dataset",
    "Sample",
    "SplitConfig",
    "augment",
    "augment_image",
    "batches",
    "denormalize",
    "hflip",
    "load_dataset",
    "normalize",
    "one_hot",
    "read_ppm",
    "resize_bilinear",
    "sample_rng",
    "split_dataset",
    "write_ppm",
]
