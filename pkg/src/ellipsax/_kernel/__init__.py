"""Stepping-kernel backend selection.

The compiled Cython stepper is used when available; the pure-numpy
implementation (identical semantics) is the fallback.  Set
``ELLIPSAX_FORCE_PY=1`` to force the fallback, e.g. for benchmarking.
"""

import os

from . import tableau  # noqa: F401  (shared constants, re-exported)

if os.environ.get("ELLIPSAX_FORCE_PY"):
    from . import _stepper_py as _impl
else:
    try:
        from . import _stepper as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build environment
        from . import _stepper_py as _impl

integrate_raw = _impl.integrate_raw
BACKEND = _impl.BACKEND

__all__ = ["BACKEND", "integrate_raw", "tableau"]
