"""Shared test configuration.

BLAS threading is pinned before numpy is first imported so that in-process
results are bit-identical to results from spawned worker processes (which
inherit these variables).
"""

import os

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
    os.environ.setdefault(_var, "1")
