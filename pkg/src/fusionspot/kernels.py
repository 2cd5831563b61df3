"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module. Set ``FUSIONSPOT_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _purepy

if os.environ.get("FUSIONSPOT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _purepy
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _impl = _purepy

BACKEND = "compiled" if _impl is not _purepy else "python"

mix64 = _impl.mix64
draw_key = _impl.draw_key
uniform = _impl.uniform
levenshtein = _impl.levenshtein
levenshtein_many = _impl.levenshtein_many
sq_distances = _impl.sq_distances
corrupt_one = _impl.corrupt_one
draw_distinct = _impl.draw_distinct

__all__ = [
    "BACKEND",
    "mix64",
    "draw_key",
    "uniform",
    "levenshtein",
    "levenshtein_many",
    "sq_distances",
    "corrupt_one",
    "draw_distinct",
]
