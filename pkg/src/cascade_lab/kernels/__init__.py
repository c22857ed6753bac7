"""Inner-loop kernels with a compiled backend and a pure-Python fallback.

The compiled extension ``_core`` is used when it imports; set
``CASCADE_LAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("CASCADE_LAB_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _core as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else _fallback
BACKEND = "compiled" if compiled is not None else "python"

thomas_solve = _impl.thomas_solve
cn_cascade_march = _impl.cn_cascade_march
recurrence_march = _impl.recurrence_march

__all__ = [
    "BACKEND",
    "cn_cascade_march",
    "compiled",
    "fallback",
    "recurrence_march",
    "thomas_solve",
]
