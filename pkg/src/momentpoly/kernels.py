"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``MOMENTPOLY_PURE_PYTHON=1`` to force the numpy path.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_c = None
if not os.environ.get("MOMENTPOLY_PURE_PYTHON"):
    try:
        from . import _ckernels as _c  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _c = None


def min_norm_point(P, tol: float = 1e-12, max_iter: int = 500):
    if _c is not None:
        x, w = _c.min_norm_point(np.ascontiguousarray(P, dtype=float), tol, max_iter)
        return np.asarray(x), np.asarray(w)
    return _pykernels.min_norm_point(P, tol, max_iter)


def project_points(V, X, tol: float = 1e-12):
    if _c is not None:
        V = np.ascontiguousarray(V, dtype=float)
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        proj, dist = _c.project_points(V, X, tol)
        return np.asarray(proj), np.asarray(dist)
    return _pykernels.project_points(V, X, tol)


def double_bracket_descent(A, step=0.1, tol=1e-9, max_steps=100000, shrink=0.5,
                           grow=1.5, max_step=10.0, record=True):
    A = np.asarray(A)
    if _c is not None and not np.iscomplexobj(A):
        out = _c.double_bracket_descent(
            np.ascontiguousarray(A, dtype=float), step, tol, max_steps, shrink, grow, max_step, record
        )
        A2, fs, rs, steps, conv, res = out
        return np.asarray(A2), np.asarray(fs), np.asarray(rs), int(steps), bool(conv), float(res)
    return _pykernels.double_bracket_descent(A, step, tol, max_steps, shrink, grow, max_step, record)
