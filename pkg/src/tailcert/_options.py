"""Backend selection for the compiled kernels.

``TAILCERT_BACKEND=numpy`` forces the pure-numpy path; ``numba`` (the default
when numba imports) uses the @njit kernels. ``NUMBA_DISABLE_JIT=1`` is also
honoured and maps to the numpy path.
"""

import os

_requested = os.getenv("TAILCERT_BACKEND", "").strip().lower()

try:  # pragma: no cover - depends on the environment
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

if _requested not in ("", "numba", "numpy"):
    raise ImportError(f"TAILCERT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if os.getenv("NUMBA_DISABLE_JIT", "0") not in ("", "0"):
    BACKEND = "numpy"
elif _requested:
    BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"
else:
    BACKEND = "numba" if HAVE_NUMBA else "numpy"

NUMBA_OPTS = {"cache": True, "nogil": True}
