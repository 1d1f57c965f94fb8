"""High-order-compact ADI solver for the 2D quotient PDE in logit coordinates.

The PDE in the transformed coordinates has constant diffusion alpha = 1/2,

    dV/dt = 2 eps V + cx V_x + dy V_y + alpha (V_xx + V_yy),

and is advanced with the operator-factored Crank-Nicolson scheme

    (L_x + dt/2 A_x)(L_y + dt/2 A_y) V^{n+1}
        = (L_x - dt/2 A_x)(L_y - dt/2 A_y) V^n,

split into two sequences of independent tridiagonal line solves. A_x/A_y
carry fourth-order compact corrections of the per-direction operator
-(alpha d_xx + cx d_x + eps); with all lower-order coefficients zero they
reduce to -alpha delta_x^2 and L_x to 1 + (dx^2/12) delta_x^2. The zeroth
coefficient 2 eps splits as eps into each direction.

Time-dependent coefficients are frozen per step at the midpoint t^{n+1/2},
clamped one step above the coefficients' singular time, and the Dirichlet
ring is pinned to the boundary value at every level. The intermediate
sweep's edge values carry the consistent (L_y + dt/2 A_y) correction so
the split does not degrade the time order.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, InvalidParameterError, TrigSingularityError

_HALF_PI = np.pi / 2.0


def _check_no_pole(lo, hi, axis):
    m_start = int(np.ceil(lo / _HALF_PI - 1e-12))
    m_end = int(np.floor(hi / _HALF_PI + 1e-12))
    for m in range(m_start, m_end + 1):
        if m % 2 != 0:
            raise TrigSingularityError(
                f"{axis} range [{lo}, {hi}] crosses the tan/sec pole at {m} pi/2"
            )


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangle mesh in the transformed coordinates plus time axis."""

    x_min: float
    x_max: float
    Mx: int
    y_min: float
    y_max: float
    My: int
    t0: float
    T: float
    N: int

    def __post_init__(self):
        if self.Mx < 4 or self.My < 4:
            raise InvalidParameterError("need Mx, My >= 4")
        if self.N < 1:
            raise InvalidParameterError("need N >= 1")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidParameterError("empty spatial range")
        if not self.T > self.t0:
            raise InvalidParameterError("require T > t0")
        if self.dt > min(self.dx, self.dy) * (1.0 + 1e-12):
            raise InvalidParameterError(
                f"dt={self.dt:.4g} must not exceed min(dx, dy)={min(self.dx, self.dy):.4g}"
            )
        _check_no_pole(self.x_min, self.x_max, "x")
        _check_no_pole(self.y_min, self.y_max, "y")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.Mx

    @property
    def dy(self):
        return (self.y_max - self.y_min) / self.My

    @property
    def dt(self):
        return (self.T - self.t0) / self.N

    def nodes_x(self):
        return self.x_min + self.dx * np.arange(self.Mx + 1)

    def nodes_y(self):
        return self.y_min + self.dy * np.arange(self.My + 1)

    def times(self):
        return self.t0 + self.dt * np.arange(self.N + 1)

    @staticmethod
    def steps_for(x_min, x_max, mx, y_min, y_max, my, t0, T, n_requested):
        """Smallest step count >= n_requested honouring dt <= min(dx, dy)."""
        dx = (x_max - x_min) / mx
        dy = (y_max - y_min) / my
        n_min = int(np.ceil((T - t0) / min(dx, dy) - 1e-12))
        return max(int(n_requested), n_min, 1)


@dataclass(frozen=True)
class RatioField2D:
    """Time-stamped stack of mesh functions: values[n, ix, iy]."""

    grid: Grid2D
    values: np.ndarray
    boundary_value: float = 1.0
    t_init_effective: float = None

    def __post_init__(self):
        self.values.setflags(write=False)


@dataclass(frozen=True)
class CompactOperators:
    """Per-direction three-point stencils of A_x, L_x, A_y, L_y at one time.

    Arrays are (Mx+1, My+1); entry [i, j] weights the (i-1 / i / i+1)
    neighbours for the x stencils and (j-1 / j / j+1) for the y stencils.
    """

    t: float
    alpha: float
    ax_lo: np.ndarray
    ax_di: np.ndarray
    ax_up: np.ndarray
    lx_lo: np.ndarray
    lx_di: np.ndarray
    lx_up: np.ndarray
    ay_lo: np.ndarray
    ay_di: np.ndarray
    ay_up: np.ndarray
    ly_lo: np.ndarray
    ly_di: np.ndarray
    ly_up: np.ndarray


def _direction_stencils(p, s, step, alpha, axis):
    """Compact A and L stencils for -(alpha d2 + p d1 + s) along one axis."""
    dp = np.gradient(p, step, axis=axis)
    ds = np.gradient(s, step, axis=axis)
    d2p = _second_diff(p, step, axis)
    d2s = _second_diff(s, step, axis)
    w = step * step / 12.0
    g1 = alpha + w * (p * p / alpha + s + 2.0 * dp)
    g2 = -p + w * (-d2p - (p / alpha) * dp - 2.0 * ds - p * s / alpha)
    g3 = -s + w * (-d2s - (p / alpha) * ds)
    inv2 = 1.0 / (step * step)
    a_lo = -g1 * inv2 - g2 / (2.0 * step)
    a_di = 2.0 * g1 * inv2 + g3
    a_up = -g1 * inv2 + g2 / (2.0 * step)
    l_off = step * p / (24.0 * alpha)
    l_lo = 1.0 / 12.0 - l_off
    l_di = np.full_like(p, 5.0 / 6.0)
    l_up = 1.0 / 12.0 + l_off
    return a_lo, a_di, a_up, l_lo, l_di, l_up


def _second_diff(f, step, axis):
    out = np.zeros_like(f)
    sl = [slice(None)] * f.ndim
    sl_c, sl_m, sl_p = list(sl), list(sl), list(sl)
    sl_c[axis] = slice(1, -1)
    sl_m[axis] = slice(None, -2)
    sl_p[axis] = slice(2, None)
    out[tuple(sl_c)] = (f[tuple(sl_p)] - 2.0 * f[tuple(sl_c)] + f[tuple(sl_m)]) / step**2
    # edge rows copy their neighbour; edge stencils are never applied
    sl_edge, sl_next = list(sl), list(sl)
    sl_edge[axis] = 0
    sl_next[axis] = 1
    out[tuple(sl_edge)] = out[tuple(sl_next)]
    sl_edge[axis] = -1
    sl_next[axis] = -2
    out[tuple(sl_edge)] = out[tuple(sl_next)]
    return out


def assemble_operators(coeffs, grid, t):
    """Sample the coefficient fields at time t and build all four stencils."""
    x = grid.nodes_x()[:, None]
    y = grid.nodes_y()[None, :]
    shape = (grid.Mx + 1, grid.My + 1)
    s = np.broadcast_to(np.asarray(coeffs.eps(x, y, t), dtype=float), shape).copy()
    p = np.broadcast_to(np.asarray(coeffs.cx(x, y, t), dtype=float), shape).copy()
    q = np.broadcast_to(np.asarray(coeffs.dy(x, y, t), dtype=float), shape).copy()
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        bad = np.argwhere(~(np.isfinite(s) & np.isfinite(p) & np.isfinite(q)))[0]
        raise InvalidParameterError(
            f"non-finite coefficient at grid node ({bad[0]}, {bad[1]}), t={t}"
        )
    ax = _direction_stencils(p, s, grid.dx, coeffs.alpha, axis=0)
    ay = _direction_stencils(q, s, grid.dy, coeffs.alpha, axis=1)
    return CompactOperators(
        t=float(t), alpha=coeffs.alpha,
        ax_lo=ax[0], ax_di=ax[1], ax_up=ax[2],
        lx_lo=ax[3], lx_di=ax[4], lx_up=ax[5],
        ay_lo=ay[0], ay_di=ay[1], ay_up=ay[2],
        ly_lo=ay[3], ly_di=ay[4], ly_up=ay[5],
    )


def _apply_x(lo, di, up, v):
    """Apply an x-direction stencil at interior i, all j."""
    out = np.zeros_like(v)
    out[1:-1, :] = lo[1:-1, :] * v[:-2, :] + di[1:-1, :] * v[1:-1, :] + up[1:-1, :] * v[2:, :]
    return out


def _apply_y(lo, di, up, v):
    """Apply a y-direction stencil at interior j, all i."""
    out = np.zeros_like(v)
    out[:, 1:-1] = lo[:, 1:-1] * v[:, :-2] + di[:, 1:-1] * v[:, 1:-1] + up[:, 1:-1] * v[:, 2:]
    return out


def adi_step(ops_now, ops_next, v_now, dt, boundary_value=1.0):
    """One factored step: x-implicit sweep to the intermediate level, then
    y-implicit sweep, with the Dirichlet ring pinned to boundary_value.

    ops_now feeds the explicit right-hand side, ops_next the implicit
    solves (callers pass midpoint-sampled operators for both).
    """
    v = np.asarray(v_now, dtype=float)
    nx, ny = v.shape
    bval = float(boundary_value)
    half = 0.5 * dt

    w = _apply_y(ops_now.ly_lo, ops_now.ly_di, ops_now.ly_up, v) - half * _apply_y(
        ops_now.ay_lo, ops_now.ay_di, ops_now.ay_up, v
    )
    rhs = _apply_x(
        ops_now.lx_lo - half * ops_now.ax_lo,
        ops_now.lx_di - half * ops_now.ax_di,
        ops_now.lx_up - half * ops_now.ax_up,
        w,
    )

    # Intermediate-level edge values: (L_y + dt/2 A_y) applied to the
    # constant boundary data; A_y annihilates all but its zeroth column.
    g3y = ops_next.ay_lo + ops_next.ay_di + ops_next.ay_up
    vstar_left = bval * (1.0 + half * g3y[0, 1:-1])
    vstar_right = bval * (1.0 + half * g3y[-1, 1:-1])

    m_lo = ops_next.lx_lo + half * ops_next.ax_lo
    m_di = ops_next.lx_di + half * ops_next.ax_di
    m_up = ops_next.lx_up + half * ops_next.ax_up
    b = rhs[1:-1, 1:-1].copy()
    b[0, :] -= m_lo[1, 1:-1] * vstar_left
    b[-1, :] -= m_up[-2, 1:-1] * vstar_right
    vstar_int = _kernels.tridiag_solve_batch(
        m_lo[1:-1, 1:-1].T, m_di[1:-1, 1:-1].T, m_up[1:-1, 1:-1].T, b.T
    ).T

    m_lo = ops_next.ly_lo + half * ops_next.ay_lo
    m_di = ops_next.ly_di + half * ops_next.ay_di
    m_up = ops_next.ly_up + half * ops_next.ay_up
    b = vstar_int.copy()
    b[:, 0] -= m_lo[1:-1, 1] * bval
    b[:, -1] -= m_up[1:-1, -2] * bval
    v_int = _kernels.tridiag_solve_batch(
        m_lo[1:-1, 1:-1], m_di[1:-1, 1:-1], m_up[1:-1, 1:-1], b
    )

    out = np.full((nx, ny), bval)
    out[1:-1, 1:-1] = v_int
    return out


def solve_ratio_2d(coeffs, grid, boundary_value=1.0, initial_values=None):
    """March the factored scheme over the grid; returns the field stack.

    The unit initial level stands for data imposed at t0 + dt (coefficient
    sampling times are clamped there to dodge the 1/t singularity).
    """
    nx, ny = grid.Mx + 1, grid.My + 1
    if initial_values is None:
        v = np.full((nx, ny), float(boundary_value))
        v[1:-1, 1:-1] = 1.0
    else:
        v = np.asarray(initial_values, dtype=float).copy()
        if v.shape != (nx, ny):
            raise InvalidParameterError(f"initial_values must have shape {(nx, ny)}")
    stack = np.empty((grid.N + 1, nx, ny))
    stack[0] = v
    t_floor = coeffs.valid_t_min + grid.dt
    for n in range(grid.N):
        t_mid = grid.t0 + (n + 0.5) * grid.dt
        ops = assemble_operators(coeffs, grid, max(t_mid, t_floor))
        v = adi_step(ops, ops, v, grid.dt, boundary_value)
        stack[n + 1] = v
    return RatioField2D(
        grid=grid,
        values=stack,
        boundary_value=float(boundary_value),
        t_init_effective=grid.t0 + grid.dt,
    )


def eval_field_2d(field, x, y, t):
    """Trilinear interpolation in (x, y, t); exact at grid nodes."""
    g = field.grid
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if (
        np.any(x < g.x_min - 1e-12) or np.any(x > g.x_max + 1e-12)
        or np.any(y < g.y_min - 1e-12) or np.any(y > g.y_max + 1e-12)
        or np.any(t < g.t0 - 1e-12) or np.any(t > g.T + 1e-12)
    ):
        raise DomainError("query point outside the field domain")
    fx = np.clip((x - g.x_min) / g.dx, 0.0, g.Mx)
    fy = np.clip((y - g.y_min) / g.dy, 0.0, g.My)
    ft = np.clip((t - g.t0) / g.dt, 0.0, g.N)
    i0 = np.minimum(fx.astype(int), g.Mx - 1)
    j0 = np.minimum(fy.astype(int), g.My - 1)
    n0 = np.minimum(ft.astype(int), g.N - 1)
    wx, wy, wt = fx - i0, fy - j0, ft - n0
    v = field.values
    out = np.zeros(np.broadcast(x, y, t).shape)
    for dn, wn in ((0, 1 - wt), (1, wt)):
        plane = (
            v[n0 + dn, i0, j0] * (1 - wx) * (1 - wy)
            + v[n0 + dn, i0 + 1, j0] * wx * (1 - wy)
            + v[n0 + dn, i0, j0 + 1] * (1 - wx) * wy
            + v[n0 + dn, i0 + 1, j0 + 1] * wx * wy
        )
        out = out + wn * plane
    return out if out.ndim else float(out)


def normalized_values(field):
    """Display-only rescale of the stack by its global maximum."""
    peak = float(np.max(field.values))
    if peak == 0.0:
        return field.values.copy()
    return field.values / peak


def write_field2d_csv(field, path, values=None):
    """Serialise the stack as `t,x,y,V` rows (t outer, then x, then y)."""
    vals = field.values if values is None else values
    g = field.grid
    xs, ys, ts = g.nodes_x(), g.nodes_y(), g.times()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,y,V\n")
        for n, t in enumerate(ts):
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    fh.write(f"{float(t)!r},{float(x)!r},{float(y)!r},{float(vals[n, i, j])!r}\n")


_MAGIC = b"RF2D"
_HEADER = struct.Struct("<4sIIIffff")  # magic, nt, nx, ny, x_min, x_max, y_min, y_max


def write_field2d_binary(field, path):
    """Row-major binary dump with a 32-byte header (magic, dims, ranges).

    Payload: nt float64 time stamps followed by the nt*nx*ny float64 stack.
    """
    g = field.grid
    nt, nx, ny = field.values.shape
    header = _HEADER.pack(_MAGIC, nt, nx, ny, g.x_min, g.x_max, g.y_min, g.y_max)
    assert len(header) == 32
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(g.times(), dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field2d_binary(path):
    """Inverse of :func:`write_field2d_binary`; returns (times, values, ranges)."""
    with open(path, "rb") as fh:
        raw = fh.read(32)
        magic, nt, nx, ny, x_min, x_max, y_min, y_max = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise InvalidParameterError("not a 2D field dump")
        times = np.frombuffer(fh.read(8 * nt), dtype="<f8")
        values = np.frombuffer(fh.read(8 * nt * nx * ny), dtype="<f8").reshape(nt, nx, ny)
    return times, values, (x_min, x_max, y_min, y_max)
