"""Hot kernels with interchangeable numba and numpy implementations.

The active backend is chosen at import time from ``TAILCERT_BACKEND``; both
modules stay importable through :func:`get_backend` for parity checks.
"""

import importlib

from .._options import BACKEND, HAVE_NUMBA

_impl = importlib.import_module(f".{'_numba' if BACKEND == 'numba' else '_numpy'}", __name__)

NAME = _impl.NAME
project_l1_rows = _impl.project_l1_rows
metric_project_l1_rows = _impl.metric_project_l1_rows
metric_project_l2_rows = _impl.metric_project_l2_rows
mnp_rows = _impl.mnp_rows
vertex_argmax_rows = _impl.vertex_argmax_rows


def get_backend(name):
    if name == "numba" and not HAVE_NUMBA:
        raise ImportError("numba is not installed")
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    return importlib.import_module(f"._{name}", __name__)
