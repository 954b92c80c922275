import numpy as np
import pytest

from guardnet.data.transforms import (
    AugmentConfig,
    augment_image,
    denormalize,
    hflip,
    normalize,
    resize_bilinear,
    sample_rng,
)
from guardnet.errors import ConfigError, RangeError


def test_normalize_maps_anchor_values_exactly() -> None:
    pixels = np.array([0.0, 127.0, 254.0], dtype=np.float32).reshape(1, 1, 3)

    out = normalize(pixels)

    assert out.dtype == np.float32
    assert out.reshape(-1).tolist() == [-1.0, 0.0, 1.0]


def test_normalize_range_and_inverse() -> None:
    pixels = np.arange(256, dtype=np.float32).reshape(1, 256, 1).repeat(3, axis=2)

    out = normalize(pixels)

    assert out.min() == -1.0
    assert out.max() == pytest.approx(255 / 127 - 1, abs=1e-6)
    np.testing.assert_allclose(denormalize(out), pixels, atol=1e-4)


def test_normalize_rejects_out_of_range() -> None:
    with pytest.raises(RangeError):
        normalize(np.full((1, 1, 3), 256.0))
    with pytest.raises(RangeError):
        normalize(np.full((1, 1, 3), -1.0))


def test_resize_identity_and_corners() -> None:
    image = np.random.default_rng(0).uniform(0, 255, (6, 9, 3)).astype(np.float32)

    np.testing.assert_allclose(resize_bilinear(image, (6, 9)), image, atol=1e-4)
    scaled = resize_bilinear(image, (4, 5))
    for (r, c), (R, C) in (((0, 0), (0, 0)), ((0, 4), (0, 8)), ((3, 0), (5, 0)), ((3, 4), (5, 8))):
        np.testing.assert_allclose(scaled[r, c], image[R, C], atol=1e-4)


def test_resize_constant_image_stays_constant() -> None:
    image = np.full((10, 7, 3), 42.0, dtype=np.float32)

    np.testing.assert_allclose(resize_bilinear(image, (224, 224)), 42.0, atol=1e-4)


def test_resize_interpolates_midpoint() -> None:
    image = np.zeros((2, 2, 3), dtype=np.float32)
    image[:, 1] = 100.0

    out = resize_bilinear(image, (2, 3))

    np.testing.assert_allclose(out[:, 1], 50.0)


def test_hflip_mirrors_columns() -> None:
    image = np.arange(12, dtype=np.float32).reshape(1, 4, 3)

    np.testing.assert_array_equal(hflip(image)[0, 0], image[0, 3])
    np.testing.assert_array_equal(hflip(hflip(image)), image)


def test_identity_augmentation_is_noop() -> None:
    image = np.random.default_rng(1).uniform(0, 255, (8, 8, 3)).astype(np.float32)

    out = augment_image(image, AugmentConfig.identity(), sample_rng(0, 0, 0))

    np.testing.assert_array_equal(out, image)


def test_augmentation_keeps_shape_and_range() -> None:
    image = np.random.default_rng(2).uniform(0, 255, (16, 16, 3)).astype(np.float32)
    config = AugmentConfig(seed=5)

    for index in range(10):
        out = augment_image(image, config, sample_rng(5, 0, index))
        assert out.shape == image.shape
        assert out.min() >= 0 and out.max() <= 255


def test_augmentation_is_reproducible_per_sample() -> None:
    image = np.random.default_rng(3).uniform(0, 255, (16, 16, 3)).astype(np.float32)
    config = AugmentConfig(rotation_deg=20, seed=9)

    first = augment_image(image, config, sample_rng(9, 2, 4))
    second = augment_image(image, config, sample_rng(9, 2, 4))
    other_epoch = augment_image(image, config, sample_rng(9, 3, 4))

    assert first.tobytes() == second.tobytes()
    assert first.tobytes() != other_epoch.tobytes()


def test_flip_only_augmentation() -> None:
    image = np.random.default_rng(4).uniform(0, 255, (4, 4, 3)).astype(np.float32)
    config = AugmentConfig(rotation_deg=0.0, scale_range=(1.0, 1.0), hflip_prob=1.0)

    np.testing.assert_array_equal(augment_image(image, config, sample_rng(0, 0, 0)), hflip(image))


def test_augment_config_validation() -> None:
    with pytest.raises(ConfigError):
        AugmentConfig(scale_range=(1.2, 0.8)).validate()
    with pytest.raises(ConfigError):
        AugmentConfig(hflip_prob=1.5).validate()
