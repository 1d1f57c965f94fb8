"""Independent ground-truth machinery used to validate the other modules.

Nothing here touches the PDE solvers: the closed-form quotient comes from
the two Gaussian densities directly, the brute-force marginals from a
plain Euler-Maruyama discretisation, and the distribution distances from
the Kolmogorov-Smirnov sup statistic.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParameterError, SimulationBlowupError
from .rng import stream

PHILOX_ROLE_EM = 7


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample set with convenience moments."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "samples", arr)
        if arr.size < 1:
            raise InvalidParameterError("need at least one sample")

    @property
    def count(self):
        return self.samples.size

    @property
    def mean(self):
        return float(np.mean(self.samples))

    @property
    def var(self):
        return float(np.var(self.samples, ddof=1))

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("value\n")
            for v in self.samples:
                fh.write(f"{float(v)!r}\n")


def ou_exact_ratio(beta, sigma, x0, x, t, t0=0.0):
    """Closed-form quotient of the mean-reverting and driftless densities.

    V(x, t) = (s1/s2) exp(-[ (x - x0 e^{-b dt})^2 / s2^2
                            - (x - x0)^2 / s1^2 ] / 2)
    with s1^2 = sigma^2 dt and s2^2 = sigma^2 (1 - e^{-2 b dt}) / (2 b).
    Uses expm1 so arbitrarily small beta evaluates stably; beta == 0
    returns the limit value 1.
    """
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    dt = np.asarray(t, dtype=float) - t0
    if np.any(dt <= 0.0):
        raise DomainError("quotient requires t > t0")
    x = np.asarray(x, dtype=float)
    if beta == 0.0:
        out = np.ones(np.broadcast(x, dt).shape)
        return out if out.ndim else 1.0
    b = float(beta)
    s2sq = sigma**2 * (-np.expm1(-2.0 * b * dt)) / (2.0 * b)
    s1sq = sigma**2 * dt
    mu2 = x0 * np.exp(-b * dt)
    expo = -0.5 * ((x - mu2) ** 2 / s2sq - (x - x0) ** 2 / s1sq)
    out = np.sqrt(s1sq / s2sq) * np.exp(expo)
    return out if np.ndim(out) else float(out)


def ou_ratio_bound(beta, x0, T, x_max):
    """Upper bound e^{(beta/2)(x_max^2 - x0^2 + T)} on the exact quotient."""
    return float(np.exp(0.5 * beta * (x_max**2 - x0**2 + T)))


def euler_maruyama(model, x0, t_end, dt, n_paths, seed, t0=0.0, clip=None):
    """Brute-force marginal of a 1D model at t_end via Euler-Maruyama.

    ``clip`` optionally confines the state to [clip[0], clip[1]] after each
    step; bounded state spaces with degenerate square-root diffusion need
    it to avoid NaNs. Weak order 1, documented oracle-only bias O(dt).
    """
    if model.dim != 1:
        raise InvalidParameterError("euler_maruyama supports dim 1 models")
    if dt <= 0 or n_paths < 1:
        raise InvalidParameterError("need dt > 0 and n_paths >= 1")
    rng = stream(seed, PHILOX_ROLE_EM)
    n_steps = int(round((t_end - t0) / dt))
    if n_steps < 1:
        raise InvalidParameterError("time window shorter than one step")
    x = np.full(n_paths, float(x0))
    t = t0
    sqrt_dt = np.sqrt(dt)
    for _ in range(n_steps):
        z = rng.standard_normal(n_paths)
        diff = np.sqrt(np.asarray(model.sq_diffusion(x), dtype=float))
        x = x + np.asarray(model.drift(x, t), dtype=float) * dt + diff * sqrt_dt * z
        if clip is not None:
            np.clip(x, clip[0], clip[1], out=x)
        if not np.all(np.isfinite(x)):
            bad = int(np.flatnonzero(~np.isfinite(x))[0])
            raise SimulationBlowupError(f"non-finite state in path {bad}", path_index=bad)
        t += dt
    return EmpiricalDistribution(samples=x)


def _as_sorted(arr):
    if isinstance(arr, EmpiricalDistribution):
        return arr.samples
    return np.sort(np.asarray(arr, dtype=float))


def ks_statistic(a, b):
    """Kolmogorov-Smirnov sup-distance.

    Two-sample when ``b`` is an array/EmpiricalDistribution, one-sample
    when ``b`` is a CDF callable. Requires at least 10 samples per set.
    """
    xs = _as_sorted(a)
    if xs.size < 10:
        raise InvalidParameterError("need at least 10 samples")
    n = xs.size
    if callable(b):
        cdf = np.asarray(b(xs), dtype=float)
        if not np.all(np.isfinite(cdf)):
            raise InvalidParameterError("CDF returned non-finite values")
        hi = np.arange(1, n + 1) / n - cdf
        lo = cdf - np.arange(0, n) / n
        return float(max(np.max(hi), np.max(lo)))
    ys = _as_sorted(b)
    if ys.size < 10:
        raise InvalidParameterError("need at least 10 samples")
    m = ys.size
    pooled = np.concatenate([xs, ys])
    cdf_x = np.searchsorted(xs, pooled, side="right") / n
    cdf_y = np.searchsorted(ys, pooled, side="right") / m
    return float(np.max(np.abs(cdf_x - cdf_y)))
