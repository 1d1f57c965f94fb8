"""Coefficient fields of the parabolic PDE obeyed by the density quotient.

For a target/proposal pair sharing the squared diffusion sigma(x), the
quotient V = P_target / P_proposal of their transition densities solves

    dV/dt = a(x,t) V + b(x,t) V_x + c(x,t) V_xx

with
    a = d/dx[S_p - S_t] + (S_p - S_t) d/dx log P_proposal
    b = sigma d/dx log P_proposal + dsigma/dx - S_t
    c = sigma / 2

where S_p and S_t are the proposal and target drifts. The generic builder
below is the source of truth; the hard-coded closures for the
mean-reverting and allele-frequency cases exist to cross-validate it,
since the trigonometric forms are easy to mistranscribe.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    IncompatibleModelsError,
    InvalidParameterError,
    SingularTimeError,
    TrigSingularityError,
)
from .processes import logit

COS_FLOOR = 1e-12


@dataclass(frozen=True)
class RatioCoefficients1D:
    """Zeroth/first/second-order coefficient closures of the 1D quotient PDE.

    Coefficients are finite only for t strictly above ``valid_t_min`` (the
    conditioning time of the proposal density, where 1/t terms blow up);
    solvers clamp their evaluation times one step above it.
    """

    a: Callable  # (x, t) -> zeroth-order coefficient
    b: Callable  # (x, t) -> first-order coefficient
    c: Callable  # (x, t) -> second-order coefficient
    valid_t_min: float


@dataclass(frozen=True)
class RatioCoefficients2D:
    """Coefficients of the 2D quotient PDE in logit coordinates.

    The PDE reads dV/dt = 2 eps V + cx V_x + dy V_y + alpha (V_xx + V_yy)
    with alpha = 1/2 fixed by the coordinate change.
    """

    eps: Callable  # (x, y, t)
    cx: Callable
    dy: Callable
    initial_logits: tuple
    rho: float
    h_sel: float
    valid_t_min: float
    alpha: float = 0.5


def _numeric_dx(fn, step=1e-6):
    def deriv(x, *rest):
        return (fn(x + step, *rest) - fn(x - step, *rest)) / (2.0 * step)

    return deriv


def _probe_points(model, n):
    """Interior sample points of a 1D state space, clipping infinite ends."""
    lo, hi = model.state_space[0]
    lo = -5.0 if not np.isfinite(lo) else lo
    hi = 5.0 if not np.isfinite(hi) else hi
    span = hi - lo
    return np.linspace(lo + 0.01 * span, hi - 0.01 * span, n)


def build_ratio_pde_1d(target, proposal, proposal_density, deriv_step=1e-6):
    """Assemble the 1D quotient-PDE coefficients for a model pair.

    The pair must share the squared diffusion (checked on 100 interior
    points to 1e-10 relative). Spatial derivatives use the models' analytic
    closures when registered and central differences of step ``deriv_step``
    otherwise.
    """
    if target.dim != 1 or proposal.dim != 1:
        raise InvalidParameterError("generic builder supports dim 1 only")
    pts = _probe_points(proposal, 100)
    st = np.asarray(target.sq_diffusion(pts), dtype=float)
    sp = np.asarray(proposal.sq_diffusion(pts), dtype=float)
    scale = max(1.0, float(np.max(np.abs(sp))))
    if np.max(np.abs(st - sp)) > 1e-10 * scale:
        raise IncompatibleModelsError(
            f"squared diffusions differ: {target.label} vs {proposal.label}"
        )

    d_target = target.drift_dx or _numeric_dx(target.drift, deriv_step)
    d_proposal = proposal.drift_dx or _numeric_dx(proposal.drift, deriv_step)
    d_sigma = proposal.sq_diffusion_dx or _numeric_dx(proposal.sq_diffusion, deriv_step)
    t0, x0 = proposal_density.t0, proposal_density.x0
    log_grad = proposal_density.log_grad_x

    def a(x, t):
        diff = np.asarray(proposal.drift(x, t)) - np.asarray(target.drift(x, t))
        ddiff = np.asarray(d_proposal(x, t)) - np.asarray(d_target(x, t))
        return ddiff + diff * log_grad(t0, x0, t, x)

    def b(x, t):
        sig = np.asarray(proposal.sq_diffusion(x))
        return sig * log_grad(t0, x0, t, x) + np.asarray(d_sigma(x)) - np.asarray(
            target.drift(x, t)
        )

    def c(x, t):
        return 0.5 * np.asarray(proposal.sq_diffusion(x))

    return RatioCoefficients1D(a=a, b=b, c=c, valid_t_min=float(t0))


def ou_ratio_coefficients(beta, sigma, x0, t0=0.0):
    """Printed coefficient closures for the mean-reverting target with a
    driftless proposal started at x0: a = beta (1 - x(x - x0)/(sigma^2 t)),
    b = (beta - 1/t) x + x0 / t, c = sigma^2 / 2, t measured from t0.
    """
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    s2 = float(sigma) ** 2
    bcoef = float(beta)
    x0 = float(x0)

    def _dt(t):
        dt = np.asarray(t, dtype=float) - t0
        if np.any(dt <= 0.0):
            raise SingularTimeError("coefficients undefined for t <= t0")
        return dt

    def a(x, t):
        dt = _dt(t)
        x = np.asarray(x, dtype=float)
        return bcoef * (1.0 - x * (x - x0) / (s2 * dt))

    def b(x, t):
        dt = _dt(t)
        x = np.asarray(x, dtype=float)
        return (bcoef - 1.0 / dt) * x + x0 / dt

    def c(x, t):
        _dt(t)
        return np.full_like(np.asarray(x, dtype=float), 0.5 * s2)

    return RatioCoefficients1D(a=a, b=b, c=c, valid_t_min=float(t0))


def wf1d_ratio_coefficients(gamma, y0, t0=0.0):
    """Printed coefficient closures for the transformed allele-frequency target
    against the logistic-Brownian proposal started at y0."""
    if not 0.0 < y0 < 1.0:
        raise InvalidParameterError(f"y0 must lie in (0, 1), got {y0}")
    g = float(gamma)
    beta0 = float(logit(y0))

    def _prep(y, t):
        dt = np.asarray(t, dtype=float) - t0
        if np.any(dt <= 0.0):
            raise SingularTimeError("coefficients undefined for t <= t0")
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0.0) or np.any(y >= 1.0):
            raise DomainError("state must lie strictly inside (0, 1)")
        beta = logit(y)
        if np.any(np.abs(np.cos(beta)) < COS_FLOOR):
            raise TrigSingularityError("logit state at a pole of tan/sec")
        return y, beta, dt

    def a(y, t):
        y, beta, dt = _prep(y, t)
        sec2 = 1.0 / np.cos(beta) ** 2
        return 0.5 * (
            g * np.sin(beta)
            + sec2
            + (beta - beta0) * (g * np.cos(beta) - np.tan(beta)) / dt
        )

    def b(y, t):
        y, beta, dt = _prep(y, t)
        return 0.5 * y * (1.0 - y) * (
            1.0 - 2.0 * y + 2.0 * (beta0 - beta) / dt + np.tan(beta) - g * np.cos(beta)
        )

    def c(y, t):
        y, beta, dt = _prep(y, t)
        return 0.5 * (y * (1.0 - y)) ** 2

    return RatioCoefficients1D(a=a, b=b, c=c, valid_t_min=float(t0))


def wf2d_ratio_coefficients(h_sel, beta0, rho=0.0, t0=0.0):
    """Printed coefficient closures of the 2D quotient PDE in logit coordinates.

    beta0 holds the initial logits of the two coordinates. The closures are
    the published trigonometric forms; the ADI solver samples them on grids
    that exclude the tan/sec poles at odd multiples of pi/2.
    """
    rho = float(rho)
    if abs(rho) >= 1.0:
        raise InvalidParameterError(f"|rho| must be < 1, got {rho}")
    h = float(h_sel)
    b1, b2 = float(beta0[0]), float(beta0[1])
    r2 = 1.0 - rho**2

    def _prep(x, y, t):
        dt = np.asarray(t, dtype=float) - t0
        if np.any(dt <= 0.0):
            raise SingularTimeError("coefficients undefined for t <= t0")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(np.cos(x)) < COS_FLOOR) or np.any(np.abs(np.cos(y)) < COS_FLOOR):
            raise TrigSingularityError("coordinate at a pole of tan/sec")
        return x, y, dt

    def eps(x, y, t):
        x, y, dt = _prep(x, y, t)
        sec2x = 1.0 / np.cos(x) ** 2
        sec2y = 1.0 / np.cos(y) ** 2
        mix = 0.5 * h * (np.sin(x) + np.sin(y) + 2.0 * np.sin(x) * np.sin(y))
        zx = (x - b1 - 2.0 * rho * (y - b2)) / (dt * r2)
        zy = (y - b2 - 2.0 * rho * (x - b1)) / (dt * r2)
        tx = zx * (0.5 * h * (1.0 + np.sin(y)) * np.cos(x) - np.tan(x))
        ty = zy * (0.5 * h * (1.0 + np.sin(x)) * np.cos(y) - np.tan(y))
        return 0.25 * (sec2x + sec2y + mix + tx + ty)

    def cx(x, y, t):
        x, y, dt = _prep(x, y, t)
        return (
            (b1 - x + 2.0 * rho * (y - b2)) / (dt * r2)
            + 0.5 * np.tan(x)
            - 0.25 * h * (1.0 + np.sin(y)) * np.cos(x)
        )

    def dy(x, y, t):
        x, y, dt = _prep(x, y, t)
        return (
            (b2 - y + 2.0 * rho * (x - b1)) / (dt * r2)
            + 0.5 * np.tan(y)
            - 0.25 * h * (1.0 + np.sin(x)) * np.cos(y)
        )

    return RatioCoefficients2D(
        eps=eps,
        cx=cx,
        dy=dy,
        initial_logits=(b1, b2),
        rho=rho,
        h_sel=h,
        valid_t_min=float(t0),
    )
