"""Finite-difference gradient checking.

This is the independent oracle every hand-written backward pass is tested
against: central differences around each input element, compared to the
analytic gradient with a symmetric relative error.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError, ParameterError, ShapeError


def grad_check(f, x: np.ndarray, analytic_grad: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative error between central differences of ``f`` and ``analytic_grad``.

    ``f`` must be a scalar-valued function of an array shaped like ``x`` and
    must not mutate its argument.  For each element the central difference
    ``(f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps)`` is compared to the
    analytic gradient via ``|fd - an| / max(1e-12, |fd| + |an|)``.
    """
    if eps <= 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    analytic_grad = np.asarray(analytic_grad, dtype=np.float64)
    if analytic_grad.shape != x.shape:
        raise ShapeError(
            f"analytic gradient shape {analytic_grad.shape} != input shape {x.shape}"
        )

    work = x.copy()
    flat = work.ravel()
    fd = np.empty(flat.shape)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = float(f(work))
        flat[i] = orig - eps
        f_minus = float(f(work))
        flat[i] = orig
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise NumericError(f"non-finite function value at element {i}")
        fd[i] = (f_plus - f_minus) / (2.0 * eps)

    an = analytic_grad.ravel()
    denom = np.maximum(1e-12, np.abs(fd) + np.abs(an))
    return float(np.max(np.abs(fd - an) / denom))
