"""Occupancy kernels: compiled core when available, numpy fallback otherwise.

Set CYLPERC_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the kernel-equivalence tests).
"""

import os

if os.environ.get("CYLPERC_PURE_PYTHON") == "1":
    from .fallback import occupy_grid, occupy_slice

    BACKEND = "python"
else:
    try:
        from ._occupancy import occupy_grid, occupy_slice

        BACKEND = "cython"
    except ImportError:
        from .fallback import occupy_grid, occupy_slice

        BACKEND = "python"

__all__ = ["occupy_slice", "occupy_grid", "BACKEND"]
