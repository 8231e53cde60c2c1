"""Decentralized structural damage detection on raw tri-sensor acceleration frames.

One lightweight 2-D CNN is trained per monitored structural element and
reports a per-element damage possibility percentage.  A built-in shear-frame
vibration simulator provides synthetic data for end-to-end verification.
"""

import os

# Pin BLAS to one thread (best effort: only effective if numpy has not been
# imported yet).  Multi-threaded BLAS reductions reorder sums, which would
# break the bit-for-bit reproducibility contract and make results depend on
# the worker count.  The work per matmul here is small enough that BLAS
# threading would not help anyway.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
    os.environ.setdefault(_var, "1")
del _var

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    SddError,
    ShapeError,
    ParameterError,
    NumericError,
    DataError,
    CheckpointError,
    ConfigError,
)
from .rng import Rng, randn, derive_seed  # noqa: E402
from .tensor import tensor_new  # noqa: E402
from .gradcheck import grad_check  # noqa: E402

__all__ = [
    "SddError",
    "ShapeError",
    "ParameterError",
    "NumericError",
    "DataError",
    "CheckpointError",
    "ConfigError",
    "Rng",
    "randn",
    "derive_seed",
    "tensor_new",
    "grad_check",
]
