"""Dense tensor primitives.

Tensors are plain ``numpy`` arrays, row-major, channels-last for images
(``[N, H, W, C]``). Storage is float32; float64 is accepted and preserved so
gradient checks can rerun the same code in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from guardnet.errors import AxisError, NumericError, ShapeError

Tensor = npt.NDArray[np.floating]

ElementwiseOp = Literal["add", "sub", "mul"]
ReduceOp = Literal["sum", "mean", "max", "argmax"]

_ELEMENTWISE = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


@dataclass(frozen=True, slots=True)
class Shape:
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.dims:
            raise ShapeError("shape must have at least one dim")
        if any(dim < 1 for dim in self.dims):
            raise ShapeError(f"every dim must be >= 1, got {list(self.dims)}")

    @classmethod
    def of(cls, array: np.ndarray) -> "Shape":
        return cls(tuple(int(dim) for dim in array.shape))

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def __str__(self) -> str:
        return "[" + ",".join(str(dim) for dim in self.dims) + "]"


def _float_dtype(array: np.ndarray) -> np.dtype:
    if array.dtype == np.float64:
        return np.dtype(np.float64)
    return np.dtype(np.float32)


def as_tensor(data: object, *, dtype: npt.DTypeLike | None = None) -> Tensor:
    array = np.asarray(data)
    target = np.dtype(dtype) if dtype is not None else _float_dtype(array)
    tensor = np.ascontiguousarray(array, dtype=target)
    if tensor.ndim > 0:
        Shape.of(tensor)
    return ensure_finite(tensor)


def ensure_finite(tensor: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(tensor)):
        raise NumericError(f"{what} contains NaN or Inf (shape {list(tensor.shape)})")
    return tensor


def _is_scalar(value: object) -> bool:
    return np.ndim(value) == 0 or np.size(value) == 1


def elementwise(op: ElementwiseOp, a: Tensor, b: Tensor | float) -> Tensor:
    """Pointwise ``op`` with ``b`` identical in shape, scalar, or a last-axis vector."""
    func = _ELEMENTWISE.get(op)
    if func is None:
        raise ValueError(f"unknown elementwise op '{op}'")
    a = np.asarray(a)
    b_arr = np.asarray(b, dtype=a.dtype)
    if _is_scalar(b_arr):
        b_arr = b_arr.reshape(())
    elif b_arr.shape != a.shape and b_arr.shape != a.shape[-1:]:
        raise ShapeError(
            f"{op}: shapes {list(a.shape)} and {list(b_arr.shape)} are not compatible"
        )
    return ensure_finite(func(a, b_arr), f"{op} result")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product accumulated left to right over the inner dimension."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {list(a.shape)} and {list(b.shape)}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {list(a.shape)} x {list(b.shape)}")
    dtype = np.result_type(a.dtype, b.dtype, np.float32)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=dtype)
    for k in range(a.shape[1]):
        out += np.multiply.outer(a[:, k], b[k]).astype(dtype, copy=False)
    return ensure_finite(out, "matmul result")


def reduce(op: ReduceOp, t: Tensor, axis: int) -> Tensor:
    """Reduce over ``axis``; argmax breaks ties toward the lowest index."""
    t = np.asarray(t)
    if not -t.ndim <= axis < t.ndim:
        raise AxisError(f"axis {axis} out of range for rank {t.ndim}")
    if op == "sum":
        return np.sum(t, axis=axis)
    if op == "mean":
        return np.mean(t, axis=axis)
    if op == "max":
        return np.max(t, axis=axis)
    if op == "argmax":
        return np.argmax(t, axis=axis)
    raise ValueError(f"unknown reduce op '{op}'")
