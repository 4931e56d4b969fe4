"""Small input-validation helpers shared across modules."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatchError, LabelOutOfRangeError, NonFiniteLossError


def as_matrix(a, name: str, *, require_finite: bool = True) -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 array, raising on bad shape or NaN/inf."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if require_finite and not np.all(np.isfinite(arr)):
        raise NonFiniteLossError(f"{name} contains non-finite values")
    return arr


def as_vector(a, name: str, *, require_finite: bool = True) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if require_finite and not np.all(np.isfinite(arr)):
        raise NonFiniteLossError(f"{name} contains non-finite values")
    return arr


def as_labels(a, num_classes: int, name: str = "labels") -> np.ndarray:
    """Coerce to a 1-D int64 array and range-check against ``num_classes``."""
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        # tolerate float input only when every entry is integral
        rounded = np.rint(arr)
        if not np.array_equal(rounded, arr):
            raise LabelOutOfRangeError(f"{name} must be integers")
        arr = rounded
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
        raise LabelOutOfRangeError(
            f"{name} must lie in [0, {num_classes}), got range "
            f"[{arr.min()}, {arr.max()}]"
        )
    return arr
