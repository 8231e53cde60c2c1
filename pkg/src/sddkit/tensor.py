"""Dense tensor construction and conventions.

Tensors are plain ``numpy.ndarray`` values: 64-bit floats, row-major
(C-order), so ``flat_index([i, j]) == i * shape[1] + j`` for 2-D and the
obvious multiplicative generalization for higher rank.  All layer math in
the package operates on such arrays and never produces NaN/Inf silently.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError, ShapeError


def check_shape(shape) -> tuple[int, ...]:
    """Validate a dimension list: non-empty, every entry a positive int."""
    try:
        dims = tuple(int(d) for d in shape)
    except (TypeError, ValueError) as exc:
        raise ShapeError(f"shape {shape!r} is not a list of integers") from exc
    if len(dims) == 0:
        raise ShapeError("shape must have at least one dimension")
    if any(d < 1 for d in dims):
        raise ShapeError(f"all dimensions must be >= 1, got {dims}")
    return dims


def tensor_new(shape, fill: float = 0.0) -> np.ndarray:
    """New row-major float64 tensor of ``shape`` with every element ``fill``."""
    dims = check_shape(shape)
    fill = float(fill)
    if not math.isfinite(fill):
        raise ParameterError(f"fill value must be finite, got {fill}")
    return np.full(dims, fill, dtype=np.float64)
