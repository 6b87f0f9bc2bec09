"""@njit kernels.

The single-row routines are compiled from a private copy of ``_rowwise`` so
that their calls to one another resolve to compiled code while the numpy
backend keeps using the plain-Python originals.
"""

import inspect
import sys
import types

import numpy as np
from numba import njit

from .._options import NUMBA_OPTS
from . import _rowwise

_ROW_FUNCS = (
    "project_l1",
    "l1_gap",
    "l1_face_polish",
    "metric_project_l1",
    "metric_project_l2",
    "mnp",
    "vertex_argmax",
)

_mod = types.ModuleType(__name__ + "_rowwise")
_mod.__file__ = _rowwise.__file__
sys.modules[_mod.__name__] = _mod
_ns = _mod.__dict__
exec(compile(inspect.getsource(_rowwise), _rowwise.__file__, "exec"), _ns)
for _name in _ROW_FUNCS:
    _ns[_name] = njit(**NUMBA_OPTS)(_ns[_name])

_project_l1 = _ns["project_l1"]
_metric_project_l1 = _ns["metric_project_l1"]
_metric_project_l2 = _ns["metric_project_l2"]
_mnp = _ns["mnp"]
_vertex_argmax = _ns["vertex_argmax"]

NAME = "numba"


@njit(**NUMBA_OPTS)
def project_l1_rows(Y, radius):
    out = np.empty_like(Y)
    for i in range(Y.shape[0]):
        out[i] = _project_l1(Y[i], radius)
    return out


@njit(**NUMBA_OPTS)
def metric_project_l1_rows(Y, S, L, radius, max_iter, tol):
    n = Y.shape[0]
    out = np.empty_like(Y)
    iters = np.empty(n, dtype=np.int64)
    gaps = np.empty(n)
    for i in range(n):
        u, it, gap = _metric_project_l1(Y[i], S, L, radius, max_iter, tol)
        out[i] = u
        iters[i] = it
        gaps[i] = gap
    return out, iters, gaps


@njit(**NUMBA_OPTS)
def metric_project_l2_rows(Yh, s, radius, max_iter):
    n = Yh.shape[0]
    out = np.empty_like(Yh)
    iters = np.empty(n, dtype=np.int64)
    res = np.empty(n)
    for i in range(n):
        u, it, r = _metric_project_l2(Yh[i], s, radius, max_iter)
        out[i] = u
        iters[i] = it
        res[i] = r
    return out, iters, res


@njit(**NUMBA_OPTS)
def mnp_rows(Y, R, atoms, max_iter, tol):
    """Metric projections of the rows of Y onto conv(atoms), metric RᵀR."""
    n, d = Y.shape
    RA = atoms @ R.T
    out = np.empty_like(Y)
    iters = np.empty(n, dtype=np.int64)
    gaps = np.empty(n)
    for i in range(n):
        P = RA - (R @ Y[i])
        lam, x, it, gap = _mnp(P, max_iter, tol)
        out[i] = lam @ atoms
        iters[i] = it
        gaps[i] = gap
    return out, iters, gaps


@njit(**NUMBA_OPTS)
def vertex_argmax_rows(X, V):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _vertex_argmax(X[i], V)
    return out
