"""Pure NumPy/SciPy implementations of the hot kernels.

Selected automatically when the compiled extension is unavailable (or when
RATIOFIELD_PURE_PYTHON=1). Single solves go through LAPACK's partially
pivoted banded driver; the batched solve runs the Thomas recursion
vectorised across systems.
"""

import numpy as np
from scipy.linalg import solve_banded

from ..errors import SolverBreakdownError

PIVOT_TOL = 1e-14


def tridiag_solve(dl, d, du, rhs):
    """Solve one tridiagonal system.

    dl/du hold the sub/super diagonal with dl[0] and du[-1] ignored.
    Raises SolverBreakdownError if the matrix is singular.
    """
    n = d.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = du[:-1]
    ab[1, :] = d
    ab[2, :-1] = dl[1:]
    try:
        return solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverBreakdownError(f"banded solve failed: {exc}") from exc


def tridiag_solve_batch(dl, d, du, rhs):
    """Solve K independent tridiagonal systems given as (K, n) arrays.

    Thomas recursion, vectorised over the batch axis. Systems with a
    near-zero pivot are redone individually with partial pivoting.
    """
    dl = np.ascontiguousarray(dl, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    du = np.ascontiguousarray(du, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    k, n = d.shape
    cp = np.empty((k, n))
    dp = np.empty((k, n))
    bad = np.zeros(k, dtype=bool)

    denom = d[:, 0].copy()
    bad |= np.abs(denom) < PIVOT_TOL
    denom[bad] = 1.0
    cp[:, 0] = du[:, 0] / denom
    dp[:, 0] = rhs[:, 0] / denom
    for j in range(1, n):
        denom = d[:, j] - dl[:, j] * cp[:, j - 1]
        newly_bad = np.abs(denom) < PIVOT_TOL
        bad |= newly_bad
        denom[bad] = 1.0
        cp[:, j] = du[:, j] / denom
        dp[:, j] = (rhs[:, j] - dl[:, j] * dp[:, j - 1]) / denom

    out = np.empty((k, n))
    out[:, n - 1] = dp[:, n - 1]
    for j in range(n - 2, -1, -1):
        out[:, j] = dp[:, j] - cp[:, j] * out[:, j + 1]

    if bad.any():
        for i in np.flatnonzero(bad):
            out[i] = tridiag_solve(dl[i], d[i], du[i], rhs[i])
    return out


def _cn_diagonals(a0, b1, c2, h, k):
    """Implicit-side interior diagonals for one Crank-Nicolson step."""
    lam = c2 / (h * h)
    mu = b1 / (2.0 * h)
    lower = -(k / 2.0) * (lam - mu)
    diag = 1.0 + (k / 2.0) * (2.0 * lam - a0)
    upper = -(k / 2.0) * (lam + mu)
    return lower, diag, upper


def _cn_rhs(a0, b1, c2, v, h, k):
    """Explicit-side interior right-hand side for one step."""
    lam = c2 / (h * h)
    mu = b1 / (2.0 * h)
    return v[1:-1] + (k / 2.0) * (
        a0 * v[1:-1] + mu * (v[2:] - v[:-2]) + lam * (v[2:] - 2.0 * v[1:-1] + v[:-2])
    )


def cn_march(zeroth, first, second, v0, h, k, bval):
    """March the 1D Crank-Nicolson scheme over all time levels.

    zeroth/first/second are (N+1, M+1) coefficient samples at the grid
    nodes (already clamped in time by the caller); v0 the initial row.
    Returns the full (N+1, M+1) field.
    """
    n_steps = zeroth.shape[0] - 1
    m1 = zeroth.shape[1]
    field = np.empty((n_steps + 1, m1))
    field[0] = v0
    v = np.array(v0, dtype=float)
    for i in range(n_steps):
        lower, diag, upper = _cn_diagonals(
            zeroth[i + 1, 1:-1], first[i + 1, 1:-1], second[i + 1, 1:-1], h, k
        )
        rhs = _cn_rhs(zeroth[i, 1:-1], first[i, 1:-1], second[i, 1:-1], v, h, k)
        rhs[0] -= lower[0] * bval
        rhs[-1] -= upper[-1] * bval
        try:
            interior = tridiag_solve(lower, diag, upper, rhs)
        except SolverBreakdownError as exc:
            raise SolverBreakdownError(str(exc), step=i + 1) from exc
        v = np.empty(m1)
        v[0] = bval
        v[-1] = bval
        v[1:-1] = interior
        field[i + 1] = v
    return field
