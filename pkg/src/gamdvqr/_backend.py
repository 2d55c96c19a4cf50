"""Kernel backend selection.

The elementwise copula kernels exist twice: a numba @njit build and a pure
numpy/scipy implementation with identical semantics.  ``GAMDVQR_BACKEND``
picks one (``numpy`` or ``numba``); the choice is made once at import time.

The default is numpy: on hosts without SVML the JIT's scalar libm calls
lose to numpy's SIMD transcendental loops by 2-3x on fit-sized arrays
(see benchmarks/bench_kernels.py).  Set ``GAMDVQR_BACKEND=numba`` to opt
into the JIT kernels; when numba is not importable the numpy path is used
regardless.
"""

import os

_choice = os.environ.get("GAMDVQR_BACKEND", "numpy").strip().lower()

if _choice not in ("numba", "numpy"):
    raise ValueError(f"GAMDVQR_BACKEND must be 'numba' or 'numpy', got {_choice!r}")

if _choice == "numba":
    try:
        from . import _kernels_numba as kernels
        BACKEND = "numba"
    except ImportError:
        from . import _kernels_numpy as kernels
        BACKEND = "numpy"
else:
    from . import _kernels_numpy as kernels
    BACKEND = "numpy"

__all__ = ["kernels", "BACKEND"]
