"""Catalog of diffusion models, closed-form transition densities and state maps.

Conventions used throughout the package:

* ``sq_diffusion`` stores the SQUARED diffusion coefficient, i.e. the field
  entering the second-order term of the forward (Fokker-Planck) operator.
  The SDE diffusion is its square root. Keeping one convention avoids
  silent squaring bugs between the SDE and PDE sides.
* 2-dimensional models have diagonal squared diffusion, returned as the
  length-2 vector of diagonal entries.
* Transition densities are conditioned on a segment start ``(t0, x0)``
  bound at construction; ``eval``/``log_grad_x`` still take the full
  ``(t0, x0, t, x)`` signature so densities compose with transforms.
* State spaces are interval boxes, one ``(lo, hi)`` pair per coordinate,
  open at any non-finite end and treated as open everywhere for the
  (0, 1)-type spaces. Boundary evaluation raises rather than returning
  infinities.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .errors import (
    BoundaryEvaluationError,
    InvalidParameterError,
    InvalidTimeError,
)

REAL_LINE = ((-np.inf, np.inf),)
UNIT_INTERVAL = ((0.0, 1.0),)
UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


def logit(y):
    y = np.asarray(y, dtype=float)
    return np.log(y) - np.log1p(-y)


def sigmoid(x):
    return expit(np.asarray(x, dtype=float))


def _require_interior_unit(y, what="state"):
    arr = np.asarray(y, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise BoundaryEvaluationError(f"{what} must lie strictly inside (0, 1)")
    return arr


@dataclass(frozen=True)
class SdeModel:
    """One SDE: drift, squared diffusion, state space and dimension.

    ``drift(x, t)`` and ``sq_diffusion(x)`` accept scalars or arrays in 1D;
    in 2D they take a length-2 state (or (n, 2) batch) and return per-
    coordinate values. ``drift_dx``/``sq_diffusion_dx`` are optional
    analytic spatial derivatives used by the ratio-PDE builder; when
    absent the builder falls back to central differences.
    """

    dim: int
    drift: Callable
    sq_diffusion: Callable
    state_space: tuple
    label: str
    drift_dx: Optional[Callable] = None
    sq_diffusion_dx: Optional[Callable] = None


@dataclass(frozen=True)
class ClosedFormDensity:
    """Evaluable transition density of a proposal process.

    ``eval(t0, x0, t, x)`` returns the density value, ``log_grad_x`` its
    spatial log-gradient. The bound segment start ``(t0, x0)`` records the
    conditioning point used when the density feeds the ratio-PDE builder.
    """

    eval: Callable
    log_grad_x: Callable
    label: str
    t0: float = 0.0
    x0: object = 0.0


@dataclass(frozen=True)
class StateTransform:
    """Bijective, per-coordinate monotone change of state variables."""

    forward: Callable
    inverse: Callable
    domain: tuple
    codomain: tuple
    inverse_deriv: Optional[Callable] = None
    inverse_log_deriv: Optional[Callable] = None  # d/dy log|d inverse/dy|

    def jacobian(self, y):
        if self.inverse_deriv is not None:
            return self.inverse_deriv(y)
        step = 1e-6
        return (self.inverse(y + step) - self.inverse(y - step)) / (2.0 * step)


def brownian_model(sigma):
    """Driftless Brownian motion with diffusion coefficient sigma."""
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    s2 = float(sigma) ** 2
    return SdeModel(
        dim=1,
        drift=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        sq_diffusion=lambda x: np.full_like(np.asarray(x, dtype=float), s2),
        state_space=REAL_LINE,
        label=f"brownian(sigma={sigma})",
        drift_dx=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        sq_diffusion_dx=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


def ou_model(beta, sigma):
    """Mean-reverting linear-drift model dX = -beta X dt + sigma dW."""
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    if beta < 0:
        raise InvalidParameterError(f"beta must be nonnegative, got {beta}")
    s2 = float(sigma) ** 2
    b = float(beta)
    return SdeModel(
        dim=1,
        drift=lambda x, t: -b * np.asarray(x, dtype=float),
        sq_diffusion=lambda x: np.full_like(np.asarray(x, dtype=float), s2),
        state_space=REAL_LINE,
        label=f"ou(beta={beta}, sigma={sigma})",
        drift_dx=lambda x, t: np.full_like(np.asarray(x, dtype=float), -b),
        sq_diffusion_dx=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


def ou_transition_density(beta, sigma, x0, t0=0.0):
    """Gaussian transition density of the linear-drift model.

    Mean x0 e^{-beta dt}; variance sigma^2 (1 - e^{-2 beta dt}) / (2 beta),
    which degenerates to sigma^2 dt at beta = 0.
    """
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    if beta < 0:
        raise InvalidParameterError(f"beta must be nonnegative, got {beta}")
    s2 = float(sigma) ** 2
    b = float(beta)

    def _moments(t0_, x0_, t):
        dt = np.asarray(t, dtype=float) - t0_
        if np.any(dt <= 0.0):
            raise InvalidTimeError("density requires t > t0")
        if b == 0.0:
            return np.asarray(x0_, dtype=float) * np.ones_like(dt), s2 * dt
        mean = np.asarray(x0_, dtype=float) * np.exp(-b * dt)
        var = s2 * (-np.expm1(-2.0 * b * dt)) / (2.0 * b)
        return mean, var

    def _eval(t0_, x0_, t, x):
        mean, var = _moments(t0_, x0_, t)
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)

    def _log_grad(t0_, x0_, t, x):
        mean, var = _moments(t0_, x0_, t)
        return -(np.asarray(x, dtype=float) - mean) / var

    return ClosedFormDensity(
        eval=_eval,
        log_grad_x=_log_grad,
        label=f"ou_density(beta={beta}, sigma={sigma}, x0={x0})",
        t0=float(t0),
        x0=float(x0),
    )


def logistic_brownian_model():
    """Sigmoid image of unit Brownian motion, state space (0, 1)."""

    def drift(y, t):
        y = _require_interior_unit(y)
        return 0.5 * y * (1.0 - y) * (1.0 - 2.0 * y)

    def drift_dx(y, t):
        y = _require_interior_unit(y)
        return 0.5 * (1.0 - 6.0 * y + 6.0 * y * y)

    def sq_diffusion(y):
        y = _require_interior_unit(y)
        return (y * (1.0 - y)) ** 2

    def sq_diffusion_dx(y):
        y = _require_interior_unit(y)
        return 2.0 * y * (1.0 - y) * (1.0 - 2.0 * y)

    return SdeModel(
        dim=1,
        drift=drift,
        sq_diffusion=sq_diffusion,
        state_space=UNIT_INTERVAL,
        label="logistic_brownian",
        drift_dx=drift_dx,
        sq_diffusion_dx=sq_diffusion_dx,
    )


def logistic_brownian_density(t0, y0):
    """Transition density of the sigmoid-mapped Brownian motion.

    On (0, 1) this is the Gaussian density of the logit increment times the
    logit Jacobian; it vanishes outside (0, 1).
    """
    y0 = float(y0)
    if not 0.0 < y0 < 1.0:
        raise InvalidParameterError(f"y0 must lie in (0, 1), got {y0}")

    def _eval(t0_, y0_, t, y):
        dt = np.asarray(t, dtype=float) - t0_
        if np.any(dt <= 0.0):
            raise InvalidTimeError("density requires t > t0")
        y = np.asarray(y, dtype=float)
        inside = (y > 0.0) & (y < 1.0)
        out = np.zeros(np.broadcast(y, dt).shape)
        ys = np.where(inside, y, 0.5)
        beta = logit(ys) - logit(y0_)
        dens = np.exp(-0.5 * beta**2 / dt) / (np.sqrt(2.0 * np.pi * dt) * ys * (1.0 - ys))
        out[...] = np.where(inside, dens, 0.0)
        return out if out.ndim else float(out)

    def _log_grad(t0_, y0_, t, y):
        dt = np.asarray(t, dtype=float) - t0_
        if np.any(dt <= 0.0):
            raise InvalidTimeError("density requires t > t0")
        y = _require_interior_unit(y)
        beta = logit(y) - logit(y0_)
        g = y * (1.0 - y)
        return -beta / (dt * g) - (1.0 - 2.0 * y) / g

    return ClosedFormDensity(
        eval=_eval,
        log_grad_x=_log_grad,
        label=f"logistic_brownian_density(y0={y0})",
        t0=float(t0),
        x0=y0,
    )


def wf1d_model(gamma):
    """Allele-frequency diffusion with selection drift gamma x (1 - x)."""
    g = float(gamma)

    def drift(x, t):
        x = _require_interior_unit(x)
        return g * x * (1.0 - x)

    def drift_dx(x, t):
        x = _require_interior_unit(x)
        return g * (1.0 - 2.0 * x)

    def sq_diffusion(x):
        x = _require_interior_unit(x)
        return x * (1.0 - x)

    def sq_diffusion_dx(x):
        x = _require_interior_unit(x)
        return 1.0 - 2.0 * x

    return SdeModel(
        dim=1,
        drift=drift,
        sq_diffusion=sq_diffusion,
        state_space=UNIT_INTERVAL,
        label=f"wf1d(gamma={gamma})",
        drift_dx=drift_dx,
        sq_diffusion_dx=sq_diffusion_dx,
    )


def wf1d_transformed_model(gamma):
    """Allele-frequency diffusion mapped to share the logistic-Brownian diffusion.

    Image of :func:`wf1d_model` under the arcsine-logit map; its state space
    is the image interval (sigmoid(-pi/2), sigmoid(pi/2)) inside (0, 1).
    """
    g = float(gamma)
    lo = float(sigmoid(np.array(-np.pi / 2.0)))
    hi = float(sigmoid(np.array(np.pi / 2.0)))

    def drift(y, t):
        y = _require_interior_unit(y)
        beta = logit(y)
        return 0.5 * y * (1.0 - y) * (1.0 - 2.0 * y - np.tan(beta) + g * np.cos(beta))

    def drift_dx(y, t):
        y = _require_interior_unit(y)
        beta = logit(y)
        first = 0.5 * (1.0 - 2.0 * y) * (1.0 - 2.0 * y - np.tan(beta) + g * np.cos(beta))
        return first - y * (1.0 - y) - 0.5 / np.cos(beta) ** 2 - 0.5 * g * np.sin(beta)

    base = logistic_brownian_model()
    return SdeModel(
        dim=1,
        drift=drift,
        sq_diffusion=base.sq_diffusion,
        state_space=((lo, hi),),
        label=f"wf1d_transformed(gamma={gamma})",
        drift_dx=drift_dx,
        sq_diffusion_dx=base.sq_diffusion_dx,
    )


def wf2d_models(h_sel):
    """Two-locus selection model pair: (transformed target, proposal).

    Both live on (0, 1)^2 coordinates with the squared diffusion
    diag((y_i (1 - y_i))^2); the target carries the cross-locus selection
    terms, the proposal is the componentwise sigmoid Brownian motion.
    """
    h = float(h_sel)

    def _split(y):
        y = np.asarray(y, dtype=float)
        return _require_interior_unit(y[..., 0]), _require_interior_unit(y[..., 1])

    def target_drift(y, t):
        y1, y2 = _split(y)
        b1, b2 = logit(y1), logit(y2)
        d1 = 0.5 * y1 * (1 - y1) * (
            1 - 2 * y1 - np.tan(b1) + 0.5 * h * (1 + np.sin(b2)) * np.cos(b1)
        )
        d2 = 0.5 * y2 * (1 - y2) * (
            1 - 2 * y2 - np.tan(b2) + 0.5 * h * (1 + np.sin(b1)) * np.cos(b2)
        )
        return np.stack([d1, d2], axis=-1)

    def proposal_drift(y, t):
        y1, y2 = _split(y)
        d1 = 0.5 * y1 * (1 - y1) * (1 - 2 * y1)
        d2 = 0.5 * y2 * (1 - y2) * (1 - 2 * y2)
        return np.stack([d1, d2], axis=-1)

    def sq_diffusion(y):
        y1, y2 = _split(y)
        return np.stack([(y1 * (1 - y1)) ** 2, (y2 * (1 - y2)) ** 2], axis=-1)

    lo = float(sigmoid(np.array(-np.pi / 2.0)))
    hi = float(sigmoid(np.array(np.pi / 2.0)))
    target = SdeModel(
        dim=2,
        drift=target_drift,
        sq_diffusion=sq_diffusion,
        state_space=((lo, hi), (lo, hi)),
        label=f"wf2d_transformed(h={h_sel})",
    )
    proposal = SdeModel(
        dim=2,
        drift=proposal_drift,
        sq_diffusion=sq_diffusion,
        state_space=UNIT_SQUARE,
        label="logistic_brownian_2d",
    )
    return target, proposal


def bivariate_logistic_density(t0, y0, rho=0.0):
    """Joint transition density of the componentwise sigmoid Brownian pair.

    rho is the correlation of the two logit Brownian coordinates. The
    driving noises are independent in the model, so rho defaults to 0; a
    nonzero value is accepted for the general bivariate form.
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (2,):
        raise InvalidParameterError("y0 must be a 2-vector")
    if np.any(y0 <= 0.0) or np.any(y0 >= 1.0):
        raise InvalidParameterError("y0 components must lie in (0, 1)")
    rho = float(rho)
    if abs(rho) >= 1.0:
        raise InvalidParameterError(f"|rho| must be < 1, got {rho}")
    b0 = logit(y0)

    def _eval(t0_, y0_, t, y):
        dt = np.asarray(t, dtype=float) - t0_
        if np.any(dt <= 0.0):
            raise InvalidTimeError("density requires t > t0")
        y = np.asarray(y, dtype=float)
        y1, y2 = y[..., 0], y[..., 1]
        inside = (y1 > 0) & (y1 < 1) & (y2 > 0) & (y2 < 1)
        y1s = np.where(inside, y1, 0.5)
        y2s = np.where(inside, y2, 0.5)
        z1 = logit(y1s) - b0[0]
        z2 = logit(y2s) - b0[1]
        quad = (z1**2 + z2**2 - 2.0 * rho * z1 * z2) / (2.0 * dt * (1.0 - rho**2))
        norm = 2.0 * np.pi * dt * np.sqrt(1.0 - rho**2)
        jac = y1s * (1 - y1s) * y2s * (1 - y2s)
        dens = np.exp(-quad) / (norm * jac)
        out = np.where(inside, dens, 0.0)
        return out if np.ndim(out) else float(out)

    def _log_grad(t0_, y0_, t, y):
        dt = np.asarray(t, dtype=float) - t0_
        if np.any(dt <= 0.0):
            raise InvalidTimeError("density requires t > t0")
        y = np.asarray(y, dtype=float)
        y1 = _require_interior_unit(y[..., 0])
        y2 = _require_interior_unit(y[..., 1])
        z1 = logit(y1) - b0[0]
        z2 = logit(y2) - b0[1]
        g1, g2 = y1 * (1 - y1), y2 * (1 - y2)
        c = dt * (1.0 - rho**2)
        d1 = -(z1 - rho * z2) / (c * g1) - (1.0 - 2.0 * y1) / g1
        d2 = -(z2 - rho * z1) / (c * g2) - (1.0 - 2.0 * y2) / g2
        return np.stack([d1, d2], axis=-1)

    return ClosedFormDensity(
        eval=_eval,
        log_grad_x=_log_grad,
        label=f"bivariate_logistic_density(y0={tuple(y0)}, rho={rho})",
        t0=float(t0),
        x0=y0,
    )


@dataclass(frozen=True)
class AronsonReport:
    """Grid diagnostic for the two-sided density-bound preconditions."""

    drift_bounded: bool
    drift_sup: float
    diffusion_nondegenerate: bool
    eig_min: float
    eig_max: float
    lam: float


def check_aronson_preconditions(model, grid, eig_floor=1e-8, drift_cap=1e6):
    """Report drift boundedness and diffusion non-degeneracy over a grid.

    Diagnostic only: the flags compare sup|drift| against ``drift_cap`` and
    the smallest squared-diffusion eigenvalue against ``eig_floor``. The
    reported lambda is the tightest constant with lam^-1 I <= sigma sigma^T
    <= lam I over the grid.
    """
    pts = np.asarray(grid, dtype=float)
    if pts.size == 0:
        raise InvalidParameterError("grid must be non-empty")
    if model.dim == 1:
        pts = pts.reshape(-1)
        drift_vals = np.abs(np.asarray(model.drift(pts, 0.0), dtype=float))
        eigs = np.asarray(model.sq_diffusion(pts), dtype=float).reshape(-1)
    else:
        pts = pts.reshape(-1, model.dim)
        drift_vals = np.linalg.norm(np.asarray(model.drift(pts, 0.0), dtype=float), axis=-1)
        eigs = np.asarray(model.sq_diffusion(pts), dtype=float).reshape(-1)
    drift_sup = float(np.max(drift_vals))
    eig_min = float(np.min(eigs))
    eig_max = float(np.max(eigs))
    lam = max(eig_max, 1.0 / eig_min) if eig_min > 0 else np.inf
    return AronsonReport(
        drift_bounded=drift_sup <= drift_cap,
        drift_sup=drift_sup,
        diffusion_nondegenerate=eig_min >= eig_floor,
        eig_min=eig_min,
        eig_max=eig_max,
        lam=lam,
    )


def sigmoid_transform():
    """Bijection from the real line onto (0, 1)."""
    return StateTransform(
        forward=lambda x: sigmoid(np.asarray(x, dtype=float)),
        inverse=lambda y: logit(y),
        domain=(-np.inf, np.inf),
        codomain=(0.0, 1.0),
        inverse_deriv=lambda y: 1.0 / (np.asarray(y) * (1.0 - np.asarray(y))),
        inverse_log_deriv=lambda y: (2.0 * np.asarray(y) - 1.0)
        / (np.asarray(y) * (1.0 - np.asarray(y))),
    )


def arcsine_logit_transform():
    """Map placing the allele-frequency diffusion on the logistic-Brownian diffusion.

    forward(x) = sigmoid(arcsin(2x - 1)) on (0, 1); its image is the
    interval (sigmoid(-pi/2), sigmoid(pi/2)).
    """

    def forward(x):
        x = np.asarray(x, dtype=float)
        return sigmoid(np.arcsin(2.0 * x - 1.0))

    def inverse(y):
        return 0.5 * (1.0 + np.sin(logit(y)))

    def inverse_deriv(y):
        y = np.asarray(y, dtype=float)
        return 0.5 * np.cos(logit(y)) / (y * (1.0 - y))

    def inverse_log_deriv(y):
        y = np.asarray(y, dtype=float)
        beta = logit(y)
        return (2.0 * y - 1.0 - np.tan(beta)) / (y * (1.0 - y))

    lo = float(sigmoid(np.array(-np.pi / 2.0)))
    hi = float(sigmoid(np.array(np.pi / 2.0)))
    return StateTransform(
        forward=forward,
        inverse=inverse,
        domain=(0.0, 1.0),
        codomain=(lo, hi),
        inverse_deriv=inverse_deriv,
        inverse_log_deriv=inverse_log_deriv,
    )


def transform_density(base, transform):
    """Push a closed-form density through a monotone state transform.

    Returns the density of the transformed state: the base density composed
    with the inverse map times the absolute Jacobian, zero outside the
    codomain.
    """
    lo, hi = transform.codomain

    def _eval(t0_, y0_, t, y):
        y = np.asarray(y, dtype=float)
        inside = (y > lo) & (y < hi)
        ys = np.where(inside, y, 0.5 * (lo + hi))
        x = transform.inverse(ys)
        x0 = transform.inverse(np.asarray(y0_, dtype=float))
        vals = base.eval(t0_, x0, t, x) * np.abs(transform.jacobian(ys))
        out = np.where(inside, vals, 0.0)
        return out if np.ndim(out) else float(out)

    def _log_grad(t0_, y0_, t, y):
        y = np.asarray(y, dtype=float)
        x = transform.inverse(y)
        x0 = transform.inverse(np.asarray(y0_, dtype=float))
        chain = base.log_grad_x(t0_, x0, t, x) * transform.jacobian(y)
        if transform.inverse_log_deriv is not None:
            return chain + transform.inverse_log_deriv(y)
        step = 1e-6
        corr = (
            np.log(np.abs(transform.jacobian(y + step)))
            - np.log(np.abs(transform.jacobian(y - step)))
        ) / (2.0 * step)
        return chain + corr

    y0_new = transform.forward(np.asarray(base.x0, dtype=float))
    return ClosedFormDensity(
        eval=_eval,
        log_grad_x=_log_grad,
        label=f"transformed({base.label})",
        t0=base.t0,
        x0=float(y0_new) if np.ndim(y0_new) == 0 else y0_new,
    )
