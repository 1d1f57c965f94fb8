"""Kernel backend selection.

Imports the compiled Thomas/Crank-Nicolson kernels when the extension was
built, otherwise the NumPy/SciPy fallback. RATIOFIELD_PURE_PYTHON=1 forces
the fallback. Both backends expose the same three callables:

    tridiag_solve(dl, d, du, rhs)          -> x
    tridiag_solve_batch(dl, d, du, rhs)    -> X  (K systems)
    cn_march(zeroth, first, second, v0, h, k, bval) -> field

with identical semantics: near-zero Thomas pivots are rescued with a
partially pivoted banded solve, and SolverBreakdownError is raised only
when that also fails.
"""

import os

import numpy as np

from ._fallback import PIVOT_TOL
from ._fallback import cn_march as _py_cn_march
from ._fallback import tridiag_solve as _py_tridiag_solve
from ._fallback import tridiag_solve_batch as _py_tridiag_solve_batch

_FORCE_PURE = os.environ.get("RATIOFIELD_PURE_PYTHON", "") == "1"

try:
    if _FORCE_PURE:
        raise ImportError("pure-python kernels forced by environment")
    from . import _core as _ext
except ImportError:
    _ext = None

BACKEND = "compiled" if _ext is not None else "python"


def _as_c(a):
    return np.ascontiguousarray(a, dtype=float)


if _ext is None:
    tridiag_solve = _py_tridiag_solve
    tridiag_solve_batch = _py_tridiag_solve_batch
    cn_march = _py_cn_march
else:

    def tridiag_solve(dl, d, du, rhs):
        dl, d, du, rhs = map(_as_c, (dl, d, du, rhs))
        out = np.empty_like(d)
        row = _ext.thomas(dl, d, du, rhs, out, PIVOT_TOL)
        if row >= 0:
            out = _py_tridiag_solve(dl, d, du, rhs)
        return out

    def tridiag_solve_batch(dl, d, du, rhs):
        dl, d, du, rhs = map(_as_c, (dl, d, du, rhs))
        out = np.empty_like(d)
        fails = np.empty(d.shape[0], dtype=np.int64)
        n_fail = _ext.thomas_batch(dl, d, du, rhs, out, fails, PIVOT_TOL)
        if n_fail:
            for i in np.flatnonzero(fails >= 0):
                out[i] = _py_tridiag_solve(dl[i], d[i], du[i], rhs[i])
        return out

    def cn_march(zeroth, first, second, v0, h, k, bval):
        zeroth, first, second = map(_as_c, (zeroth, first, second))
        v0 = _as_c(v0)
        n_steps = zeroth.shape[0] - 1
        field = np.empty((n_steps + 1, zeroth.shape[1]))
        field[0] = v0
        start = 0
        while start < n_steps:
            sl = slice(start, n_steps + 1)
            part, fail_step = _ext.cn_march(
                _as_c(zeroth[sl]), _as_c(first[sl]), _as_c(second[sl]),
                _as_c(field[start]), h, k, bval, PIVOT_TOL,
            )
            if fail_step < 0:
                field[sl] = part
                break
            # Pivoted rescue of the single failing step, then resume.
            field[start : start + fail_step] = part[:fail_step]
            two = slice(start + fail_step - 1, start + fail_step + 1)
            rescued = _py_cn_march(
                zeroth[two], first[two], second[two], field[start + fail_step - 1], h, k, bval
            )
            field[start + fail_step] = rescued[1]
            start += fail_step
        return field
