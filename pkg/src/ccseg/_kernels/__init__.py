"""Hot parsing kernels with a compiled core and a pure-Python fallback.

The compiled extension (built from _native.pyx) is used when importable;
set CCSEG_PURE_PYTHON=1 to force the fallback.  Both backends implement
identical semantics (see pure.py for the reference) and the test suite
holds them equal on random input.

Calendar helpers (days_from_civil / civil_from_days) always come from
the pure module: they are cheap and used outside the per-record loops.
"""

import os

from .pure import UNUSABLE, civil_from_days, days_from_civil

if os.environ.get("CCSEG_PURE_PYTHON"):
    from . import pure as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = _impl.BACKEND
http_date_to_posix = _impl.http_date_to_posix
timestamp14_to_posix = _impl.timestamp14_to_posix
count_pct_encoded = _impl.count_pct_encoded

__all__ = [
    "BACKEND",
    "UNUSABLE",
    "civil_from_days",
    "count_pct_encoded",
    "days_from_civil",
    "http_date_to_posix",
    "timestamp14_to_posix",
]
