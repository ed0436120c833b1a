"""Split-scan kernels with backend selection at import.

The compiled extension is preferred; the numpy fallback has identical
semantics. Set SCORELENS_FORCE_FALLBACK=1 to ignore the extension (used by
the benchmark and backend-parity tests).
"""

import os

from . import fallback
from .fallback import CRITERION_ENTROPY, CRITERION_GINI, NO_SPLIT

if os.environ.get("SCORELENS_FORCE_FALLBACK"):
    _impl = fallback
    BACKEND = "fallback"
else:
    try:
        from . import _splitcore as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
        BACKEND = "fallback"

best_split_class = _impl.best_split_class
best_split_variance = _impl.best_split_variance
best_split_gradhess = _impl.best_split_gradhess

__all__ = [
    "BACKEND",
    "CRITERION_ENTROPY",
    "CRITERION_GINI",
    "NO_SPLIT",
    "best_split_class",
    "best_split_gradhess",
    "best_split_variance",
    "fallback",
]
