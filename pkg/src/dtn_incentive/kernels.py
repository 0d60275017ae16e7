"""Backend selection for the subset kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``DTN_INCENTIVE_PURE=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
race_table = _kernels_py.race_table
subset_sum = _kernels_py.subset_sum

if os.environ.get("DTN_INCENTIVE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        BACKEND = "compiled"
        race_table = _compiled.race_table
        subset_sum = _compiled.subset_sum

__all__ = ["BACKEND", "race_table", "subset_sum"]
