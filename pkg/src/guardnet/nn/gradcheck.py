"""Central finite-difference checks, always evaluated in 64-bit."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

DEFAULT_STEP = 1e-3
DEFAULT_TOLERANCE = 1e-3


def numeric_gradient(
    fn: Callable[[], float],
    array: np.ndarray,
    h: float = DEFAULT_STEP,
) -> np.ndarray:
    """d fn / d array by central differences, perturbing ``array`` in place."""
    if array.dtype != np.float64:
        raise TypeError("gradient checks run on float64 arrays")
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + h
        plus = fn()
        flat[index] = original - h
        minus = fn()
        flat[index] = original
        out[index] = (plus - minus) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``|a - n| / (|a| + |n|)`` over the whole tensor, 0 when both vanish."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def weighted_sum(output: np.ndarray, upstream: np.ndarray) -> float:
    """Scalar objective whose gradient w.r.t. ``output`` is ``upstream``."""
    return float(np.sum(output * upstream))
