"""Crank-Nicolson solver for the 1D variable-coefficient quotient PDE.

Uniform space-time grid, Dirichlet data pinned at both ends, tridiagonal
systems solved by the kernel backend (compiled Thomas elimination when
available, pivoted banded LAPACK otherwise).

The quotient's coefficients carry a 1/t singularity at the conditioning
time of the proposal density, so coefficient evaluation times are clamped
one time step above ``coeffs.valid_t_min``; the unit initial row therefore
represents data imposed at ``t0 + k``, recorded on the returned field as
``t_init_effective``.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, InvalidParameterError


def _fmt(v):
    # repr round-trips float64 exactly and is byte-stable across runs.
    return repr(float(v))


@dataclass(frozen=True)
class Grid1D:
    """Uniform space-time mesh with M spatial and N temporal subintervals."""

    x_min: float
    x_max: float
    M: int
    t0: float
    T: float
    N: int

    def __post_init__(self):
        if self.M < 4:
            raise InvalidParameterError(f"M must be >= 4, got {self.M}")
        if self.N < 1:
            raise InvalidParameterError(f"N must be >= 1, got {self.N}")
        if not self.x_max > self.x_min:
            raise InvalidParameterError("require x_max > x_min")
        if not self.T > self.t0:
            raise InvalidParameterError("require T > t0")

    @property
    def h(self):
        return (self.x_max - self.x_min) / self.M

    @property
    def k(self):
        return (self.T - self.t0) / self.N

    def nodes(self):
        return self.x_min + self.h * np.arange(self.M + 1)

    def times(self):
        return self.t0 + self.k * np.arange(self.N + 1)


@dataclass(frozen=True)
class RatioField:
    """Numerical quotient V on a Grid1D: values[i, j] = V(x_j, t_i)."""

    grid: Grid1D
    values: np.ndarray
    boundary_value: float = 1.0
    t_init_effective: float = None

    def __post_init__(self):
        self.values.setflags(write=False)


def cn_step(coeffs, grid, v_now, t_now, t_next):
    """Advance one Crank-Nicolson step from t_now to t_next.

    v_now holds M+1 nodal values; the returned row keeps v_now's end
    entries as Dirichlet data. Coefficients are evaluated at the supplied
    times, which the caller is responsible for keeping inside the
    coefficients' validity window.
    """
    v_now = np.asarray(v_now, dtype=float)
    if v_now.shape != (grid.M + 1,):
        raise InvalidParameterError(f"v_now must have {grid.M + 1} entries")
    if v_now[0] != v_now[-1]:
        raise InvalidParameterError("cn_step requires equal Dirichlet values at both ends")
    x = grid.nodes()
    rows = {}
    for tag, t in (("now", t_now), ("next", t_next)):
        rows[tag] = [
            np.broadcast_to(np.asarray(f(x, t), dtype=float), x.shape).copy()
            for f in (coeffs.a, coeffs.b, coeffs.c)
        ]
    a0 = np.stack([rows["now"][0], rows["next"][0]])
    b1 = np.stack([rows["now"][1], rows["next"][1]])
    c2 = np.stack([rows["now"][2], rows["next"][2]])
    k = t_next - t_now
    field = _kernels.cn_march(a0, b1, c2, v_now, grid.h, k, float(v_now[0]))
    return field[1]


def _sample_coefficients(coeffs, grid):
    """Coefficient arrays on all grid nodes with clamped evaluation times."""
    x = grid.nodes()
    t_eval = np.maximum(grid.times(), coeffs.valid_t_min + grid.k)
    shape = (grid.N + 1, grid.M + 1)
    a0 = np.empty(shape)
    b1 = np.empty(shape)
    c2 = np.empty(shape)
    for i, t in enumerate(t_eval):
        a0[i] = np.broadcast_to(np.asarray(coeffs.a(x, t), dtype=float), x.shape)
        b1[i] = np.broadcast_to(np.asarray(coeffs.b(x, t), dtype=float), x.shape)
        c2[i] = np.broadcast_to(np.asarray(coeffs.c(x, t), dtype=float), x.shape)
    return a0, b1, c2


def solve_ratio_1d(coeffs, grid, boundary_value=1.0, initial_values=None):
    """Solve the quotient PDE over the whole grid.

    Returns a RatioField whose first row is the initial data (unit unless
    ``initial_values`` is given, as verification problems need) and whose
    first/last columns equal ``boundary_value`` at every time level.
    """
    a0, b1, c2 = _sample_coefficients(coeffs, grid)
    if np.min(c2) <= 0.0:
        raise InvalidParameterError("second-order coefficient must be positive on the grid")
    if initial_values is None:
        v0 = np.full(grid.M + 1, 1.0)
        v0[0] = boundary_value
        v0[-1] = boundary_value
    else:
        v0 = np.asarray(initial_values, dtype=float).copy()
        if v0.shape != (grid.M + 1,):
            raise InvalidParameterError(f"initial_values must have {grid.M + 1} entries")
    values = _kernels.cn_march(a0, b1, c2, v0, grid.h, grid.k, float(boundary_value))
    return RatioField(
        grid=grid,
        values=values,
        boundary_value=float(boundary_value),
        t_init_effective=grid.t0 + grid.k,
    )


def eval_field(field, x, t):
    """Bilinear interpolation of a 1D field in (x, t); exact at grid nodes."""
    g = field.grid
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    eps_x = 1e-12 * max(1.0, abs(g.x_max))
    eps_t = 1e-12 * max(1.0, abs(g.T))
    if np.any(x < g.x_min - eps_x) or np.any(x > g.x_max + eps_x):
        raise DomainError(f"x outside [{g.x_min}, {g.x_max}]")
    if np.any(t < g.t0 - eps_t) or np.any(t > g.T + eps_t):
        raise DomainError(f"t outside [{g.t0}, {g.T}]")
    fx = np.clip((x - g.x_min) / g.h, 0.0, g.M)
    ft = np.clip((t - g.t0) / g.k, 0.0, g.N)
    j0 = np.minimum(fx.astype(int), g.M - 1)
    i0 = np.minimum(ft.astype(int), g.N - 1)
    wx = fx - j0
    wt = ft - i0
    v = field.values
    out = (
        v[i0, j0] * (1 - wt) * (1 - wx)
        + v[i0, j0 + 1] * (1 - wt) * wx
        + v[i0 + 1, j0] * wt * (1 - wx)
        + v[i0 + 1, j0 + 1] * wt * wx
    )
    return out if out.ndim else float(out)


def write_field_csv(field, path):
    """Serialise a 1D field as `t,x,V` rows, row-major by time."""
    g = field.grid
    x = g.nodes()
    times = g.times()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,V\n")
        for i, t in enumerate(times):
            row = field.values[i]
            for j in range(g.M + 1):
                fh.write(f"{_fmt(t)},{_fmt(x[j])},{_fmt(row[j])}\n")
