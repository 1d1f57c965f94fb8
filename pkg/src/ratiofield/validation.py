"""Validation harnesses shared by the CLI and the test suite.

Monte-Carlo pooling of accepted sample points (against the closed-form or
the PDE-computed quotient), manufactured-solution convergence runs, and
order fitting. Pooling solves one quotient field on a grid covering all
pooled paths; the field does not depend on the path, so this matches the
per-path construction while pushing the Dirichlet boundary further out.
"""

import math

import numpy as np

from .errors import InvalidParameterError
from .oracle import ou_exact_ratio
from .processes import arcsine_logit_transform, sigmoid
from .ratio_pde import RatioCoefficients1D, ou_ratio_coefficients, wf1d_ratio_coefficients
from .rng import ROLE_PATH, ROLE_UNIFORM, stream
from .sampler import ou_analytic_bound, empirical_bound
from .solver1d import Grid1D, eval_field, solve_ratio_1d
from .solver2d import Grid2D, solve_ratio_2d
from .ratio_pde import RatioCoefficients2D


def ou_target_cdf(beta, sigma, x0, t):
    """CDF of the mean-reverting target marginal at time t from (0, x0)."""
    if beta == 0.0:
        mean, var = x0, sigma**2 * t
    else:
        mean = x0 * math.exp(-beta * t)
        var = sigma**2 * (-math.expm1(-2.0 * beta * t)) / (2.0 * beta)
    sd = math.sqrt(var)

    def cdf(x):
        z = (np.asarray(x, dtype=float) - mean) / (sd * math.sqrt(2.0))
        from scipy.special import erf

        return 0.5 * (1.0 + erf(z))

    return cdf


def _brownian_batch(n, times, t0, x0, sigma, seed, batch):
    rng = stream(seed, ROLE_PATH, batch)
    dts = np.diff(np.concatenate([[t0], times]))
    incr = rng.standard_normal((n, times.size)) * sigma * np.sqrt(dts)
    return x0 + np.cumsum(incr, axis=1)


def pool_ou_accepted(beta, sigma, x0, t_end, n_times, target_n, seed,
                     ratio="exact", m_space=300, n_time=200, batch_size=8000,
                     max_batches=200, bound_scale=1.0, grid_halfwidth=None):
    """Pool accepted end-time values across proposal paths until target_n.

    ratio="exact" uses the closed-form quotient, "pde" a single solved
    field shared across paths. Returns (samples, info dict).
    """
    times = np.linspace(t_end / n_times, t_end, n_times)
    field = None
    c_val = None
    if ratio == "pde":
        half = grid_halfwidth or (4.5 * sigma * math.sqrt(t_end) + abs(x0) + 1.0)
        grid = Grid1D(x0 - half, x0 + half, m_space, 0.0, t_end, n_time)
        field = solve_ratio_1d(ou_ratio_coefficients(beta, sigma, x0), grid)
        c_val = ou_analytic_bound(beta, x0, t_end, half + abs(x0)).value * bound_scale
    pool = []
    n_proposed = 0
    for batch in range(max_batches):
        paths = _brownian_batch(batch_size, times, 0.0, x0, sigma, seed, batch)
        x_end = paths[:, -1]
        if ratio == "exact":
            x_max = float(np.max(np.abs(paths)))
            c_val_b = ou_analytic_bound(beta, x0, t_end, x_max).value * bound_scale
            v = ou_exact_ratio(beta, sigma, x0, x_end, t_end)
        elif ratio == "pde":
            c_val_b = c_val
            xq = np.clip(x_end, field.grid.x_min, field.grid.x_max)
            v = np.maximum(eval_field(field, xq, np.full(x_end.size, t_end)), 0.0)
        else:
            raise InvalidParameterError(f"unknown ratio mode {ratio!r}")
        u = stream(seed, ROLE_UNIFORM, batch).uniform(size=batch_size)
        acc = u <= v / c_val_b
        pool.extend(x_end[acc].tolist())
        n_proposed += batch_size
        if len(pool) >= target_n:
            break
    info = {
        "n_pooled": len(pool),
        "n_proposed": n_proposed,
        "bound": c_val_b,
        "acceptance": len(pool) / n_proposed,
    }
    return np.asarray(pool), info


def pool_wf1d_accepted(gamma, x0, t_end, n_times, target_n, seed,
                       m_space=320, n_time=160, margin_beta=0.05,
                       batch_size=4000, max_batches=200):
    """Pool accepted end-time allele frequencies from the 1D pipeline.

    Shared-field pooling in the transformed coordinates; accepted values
    are mapped back through the inverse state transform.
    """
    transform = arcsine_logit_transform()
    y0 = float(transform.forward(x0))
    ylo = float(sigmoid(-np.pi / 2 + margin_beta))
    yhi = float(sigmoid(np.pi / 2 - margin_beta))
    grid = Grid1D(ylo, yhi, m_space, 0.0, t_end, n_time)
    field = solve_ratio_1d(wf1d_ratio_coefficients(gamma, y0, 0.0), grid)
    bound = empirical_bound(field)
    times = np.linspace(t_end / n_times, t_end, n_times)
    dts = np.diff(np.concatenate([[0.0], times]))
    beta0 = math.log(y0 / (1.0 - y0))
    pool = []
    n_proposed = 0
    for batch in range(max_batches):
        rng = stream(seed, ROLE_PATH, batch)
        incr = rng.standard_normal((batch_size, times.size)) * np.sqrt(dts)
        y_end = sigmoid(beta0 + np.cumsum(incr, axis=1))[:, -1]
        v = np.zeros(batch_size)
        inside = (y_end >= ylo) & (y_end <= yhi)
        v[inside] = eval_field(field, y_end[inside], np.full(int(inside.sum()), t_end))
        v = np.maximum(v, 0.0)
        u = stream(seed, ROLE_UNIFORM, batch).uniform(size=batch_size)
        acc = u <= v / bound.value
        pool.extend(y_end[acc].tolist())
        n_proposed += batch_size
        if len(pool) >= target_n:
            break
    samples = np.asarray(transform.inverse(np.asarray(pool)), dtype=float)
    info = {
        "n_pooled": len(pool),
        "n_proposed": n_proposed,
        "bound": bound.value,
        "acceptance": len(pool) / n_proposed,
        "field_note": bound.note,
    }
    return samples, info


def fit_order(steps, errors):
    """Least-squares slope of log(error) against log(step)."""
    lx = np.log(np.asarray(steps, dtype=float))
    ly = np.log(np.asarray(errors, dtype=float))
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope)


def mms_coefficients_1d():
    """Variable-coefficient 1D problem with known solution e^{-t} sin(pi x).

    The forcing is folded into the zeroth-order coefficient; the first-
    order coefficient vanishes at the ends so the fold stays bounded.
    """
    pi = np.pi

    def a(x, t):
        return -1.0 - 0.3 * pi * np.cos(pi * x) + 0.5 * pi * pi * (1.0 + 0.2 * np.cos(pi * x))

    def b(x, t):
        return 0.3 * np.sin(pi * x)

    def c(x, t):
        return 0.5 * (1.0 + 0.2 * np.cos(pi * x))

    return RatioCoefficients1D(a=a, b=b, c=c, valid_t_min=-np.inf)


def mms_exact_1d(x, t):
    return np.exp(-t) * np.sin(np.pi * np.asarray(x, dtype=float))


def run_cn_mms_levels(levels=(40, 80, 160), t_end=1.0):
    """Joint h, k refinement of the 1D scheme on the manufactured problem."""
    coeffs = mms_coefficients_1d()
    rows = []
    for m in levels:
        grid = Grid1D(0.0, 1.0, m, 0.0, t_end, m)
        field = solve_ratio_1d(coeffs, grid, boundary_value=0.0,
                               initial_values=mms_exact_1d(grid.nodes(), 0.0))
        err = float(np.max(np.abs(field.values[-1] - mms_exact_1d(grid.nodes(), t_end))))
        rows.append({"m": m, "n": m, "step": grid.h, "error": err})
    order = fit_order([r["step"] for r in rows], [r["error"] for r in rows])
    return rows, order


def heat_coefficients_2d():
    zero = lambda x, y, t: np.zeros(np.broadcast(x, y).shape)  # noqa: E731
    return RatioCoefficients2D(eps=zero, cx=zero, dy=zero, initial_logits=(0.0, 0.0),
                               rho=0.0, h_sel=0.0, valid_t_min=-np.inf)


def _heat_exact_2d(X, Y, t):
    return np.exp(-np.pi**2 * t) * np.sin(np.pi * X) * np.sin(np.pi * Y)


def run_adi_heat_space_levels(levels=(8, 16, 32), t_end=0.1):
    """Spatial refinement of the 2D scheme with dt tied to dx^2."""
    coeffs = heat_coefficients_2d()
    rows = []
    for m in levels:
        dx = 1.0 / m
        n = int(np.ceil(t_end / dx**2))
        grid = Grid2D(0.0, 1.0, m, 0.0, 1.0, m, 0.0, t_end, n)
        X, Y = grid.nodes_x()[:, None], grid.nodes_y()[None, :]
        field = solve_ratio_2d(coeffs, grid, boundary_value=0.0,
                               initial_values=_heat_exact_2d(X, Y, 0.0))
        err = float(np.max(np.abs(field.values[-1] - _heat_exact_2d(X, Y, t_end))))
        rows.append({"m": m, "n": n, "step": dx, "error": err})
    order = fit_order([r["step"] for r in rows], [r["error"] for r in rows])
    return rows, order


def run_adi_time_levels(levels=(10, 20, 40), m=24, t_end=0.1, n_ref=2560):
    """Temporal refinement against a fine-step reference at fixed space."""
    pi = np.pi
    c0, d0 = 0.4, 0.25

    def cx(x, y, t):
        return c0 * np.sin(pi * x) * (1.0 + 0.3 * np.sin(2 * t)) + 0.0 * y

    def dy(x, y, t):
        return d0 * np.sin(pi * y) * (1.0 + 0.2 * np.cos(t)) + 0.0 * x

    def eps(x, y, t):
        return 0.3 - 0.2 * np.cos(pi * x) * np.cos(pi * y) + 0.05 * np.sin(t) + 0.0 * (x + y)

    coeffs = RatioCoefficients2D(eps=eps, cx=cx, dy=dy, initial_logits=(0.0, 0.0),
                                 rho=0.0, h_sel=0.0, valid_t_min=-np.inf)

    def run(n):
        grid = Grid2D(0.0, 1.0, m, 0.0, 1.0, m, 0.0, t_end, n)
        X, Y = grid.nodes_x()[:, None], grid.nodes_y()[None, :]
        u0 = np.sin(pi * X) * np.sin(pi * Y)
        return solve_ratio_2d(coeffs, grid, boundary_value=0.0, initial_values=u0).values[-1]

    ref = run(n_ref)
    rows = []
    for n in levels:
        err = float(np.max(np.abs(run(n) - ref)))
        rows.append({"m": m, "n": n, "step": t_end / n, "error": err})
    order = fit_order([r["step"] for r in rows], [r["error"] for r in rows])
    return rows, order


def adi_separable_gap(m=600, t_end=0.04, n=24):
    """Max difference between the 2D solver and the 1D solver's outer
    product on separable driftless data (pure second-order operator)."""
    pi = np.pi
    grid2 = Grid2D(0.0, 1.0, m, 0.0, 1.0, m, 0.0, t_end, n)
    X, Y = grid2.nodes_x()[:, None], grid2.nodes_y()[None, :]
    f2 = solve_ratio_2d(heat_coefficients_2d(), grid2, boundary_value=0.0,
                        initial_values=np.sin(pi * X) * np.sin(pi * Y))
    co1 = RatioCoefficients1D(a=lambda x, t: 0.0 * x, b=lambda x, t: 0.0 * x,
                              c=lambda x, t: 0.5 + 0.0 * x, valid_t_min=-np.inf)
    grid1 = Grid1D(0.0, 1.0, m, 0.0, t_end, n)
    f1 = solve_ratio_1d(co1, grid1, boundary_value=0.0,
                        initial_values=np.sin(pi * grid1.nodes()))
    outer = f1.values[-1][:, None] * f1.values[-1][None, :]
    return float(np.max(np.abs(f2.values[-1] - outer)))
