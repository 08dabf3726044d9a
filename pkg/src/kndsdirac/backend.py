"""Backend selection for the numerical hot loops.

The package ships every performance-critical kernel in a form that can be
compiled with numba or executed as plain Python/NumPy.  The environment
variable ``KNDS_NUMBA`` picks the path once, at import time:

* unset, ``"1"``, ``"on"``, ``"true"``  -- compile kernels with ``numba.njit``
  (falls back silently to pure Python if numba cannot be imported);
* ``"0"``, ``"off"``, ``"false"``, ``"no"`` -- run the same functions
  uncompiled.

Both paths execute identical source, so results agree to the last bit up to
floating-point reassociation done by LLVM (observed differences are below
1e-15 relative).  ``benchmarks/benchmark_kernels.py`` times one against the
other.
"""

from __future__ import annotations

import os

__all__ = ["USE_NUMBA", "get_backend", "maybe_njit"]

_FALSY = {"0", "false", "off", "no"}


def _env_wants_numba() -> bool:
    return os.environ.get("KNDS_NUMBA", "1").strip().lower() not in _FALSY


USE_NUMBA = False
if _env_wants_numba():
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def get_backend() -> str:
    """Return the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"


def maybe_njit(*args, **kwargs):
    """``numba.njit`` under the numba backend, identity decorator otherwise.

    Usable both bare (``@maybe_njit``) and with options
    (``@maybe_njit(cache=True)``).
    """
    if USE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def _identity(fn):
        return fn

    return _identity
