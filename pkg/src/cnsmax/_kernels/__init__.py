"""Cubic-solver kernels with import-time backend selection.

The compiled extension (`_fast`, Cython) is used when present; the NumPy
reference (`_ref`) otherwise.  Set CNSMAX_PURE_PYTHON=1 to force the
fallback, e.g. for benchmarking or debugging.
"""

import os

if os.environ.get("CNSMAX_PURE_PYTHON") == "1":
    from . import _ref as _impl
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _ref as _impl

BACKEND = _impl.BACKEND
real_cubic_roots = _impl.real_cubic_roots
char_roots_batch = _impl.char_roots_batch

__all__ = ["BACKEND", "real_cubic_roots", "char_roots_batch"]
