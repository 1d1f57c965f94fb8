"""Pointwise rejection sampling of diffusion paths.

Pipeline: draw an exactly-sampled proposal path, solve the quotient PDE on
a grid covering it, accept each path point with probability V/c, and fill
rejected points with bridges of the proposal process. Points are accepted
or rejected individually; a path is abandoned and redrawn only when every
point is rejected.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DomainError,
    InvalidParameterError,
    SamplingFailureError,
    WholePathRejectedError,
)
from .processes import arcsine_logit_transform, logit, sigmoid
from .ratio_pde import ou_ratio_coefficients, wf1d_ratio_coefficients, wf2d_ratio_coefficients
from .rng import ROLE_BRIDGE, ROLE_PATH, ROLE_UNIFORM, stream
from .solver1d import Grid1D, eval_field, solve_ratio_1d
from .solver2d import Grid2D, eval_field_2d, solve_ratio_2d

ACCEPTED = 1
REJECTED = 0
CLAMPED_REJECTED = 2
DECISION_LABELS = {ACCEPTED: "accepted", REJECTED: "rejected", CLAMPED_REJECTED: "clamped-rejected"}

BETA_POLE = np.pi / 2.0


@dataclass(frozen=True)
class BoundSpec:
    """Envelope constant c for the accept probability V/c."""

    kind: str  # "analytic" | "empirical" | "user"
    value: float
    note: str = ""

    def __post_init__(self):
        if not self.value > 0:
            raise InvalidParameterError("bound must be positive")


def ou_analytic_bound(beta, x0, T, x_max):
    """Closed-form envelope e^{(beta/2)(x_max^2 - x0^2 + T)}."""
    value = float(np.exp(0.5 * beta * (x_max**2 - x0**2 + T)))
    return BoundSpec(kind="analytic", value=value, note=f"x_max={x_max}, T={T}")


def empirical_bound(field, safety=1.05):
    """Envelope from the solved field: max(1, max V) times a safety factor.

    Makes the rejection approximate wherever the true quotient exceeds the
    field maximum; the note records how much field mass sits above 1.
    """
    vmax = float(np.max(field.values))
    frac_above = float(np.mean(field.values > 1.0))
    return BoundSpec(
        kind="empirical",
        value=max(1.0, vmax) * safety,
        note=f"field max={vmax:.6g}, fraction of nodes above 1={frac_above:.4f}",
    )


@dataclass(frozen=True)
class PathSample:
    """One proposal path with its pointwise accept/reject record.

    ``bridged_values`` is the final output: proposal values at accepted
    indices, bridge draws at interior rejections, NaN after the last
    accepted point (no right anchor to bridge to).
    """

    times: np.ndarray
    t0: float
    x0: object
    proposal_values: np.ndarray
    ratio_values: np.ndarray
    uniforms: np.ndarray
    decisions: np.ndarray
    bridged_values: object
    seed: int
    attempt: int
    bound_c: float

    @property
    def n_accepted(self):
        return int(np.sum(self.decisions == ACCEPTED))

    @property
    def acceptance_rate(self):
        return self.n_accepted / self.times.size


def _check_times(times, t0):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidParameterError("times must be a non-empty 1D vector")
    if np.any(np.diff(times) <= 0.0):
        raise InvalidParameterError("times must be strictly increasing")
    if times[0] <= t0:
        raise InvalidParameterError("first sample time must exceed t0")
    return times


def sample_proposal_path(process, x0, times, seed, sigma=1.0, t0=0.0, attempt=0):
    """Exact draws of a proposal process at the given times.

    Supported process ids: ``brownian`` (diffusion coefficient ``sigma``),
    ``logistic-brownian`` (sigmoid of unit Brownian motion) and
    ``logistic-brownian-2d`` (componentwise, independent coordinates).
    Deterministic under a fixed (seed, attempt).
    """
    times = _check_times(times, t0)
    rng = stream(seed, ROLE_PATH, attempt)
    dts = np.diff(np.concatenate([[t0], times]))
    if process == "brownian":
        incr = rng.standard_normal(times.size) * sigma * np.sqrt(dts)
        return float(x0) + np.cumsum(incr)
    if process == "logistic-brownian":
        x0 = float(x0)
        if not 0.0 < x0 < 1.0:
            raise InvalidParameterError("logistic-brownian start must lie in (0, 1)")
        incr = rng.standard_normal(times.size) * np.sqrt(dts)
        return sigmoid(float(logit(x0)) + np.cumsum(incr))
    if process == "logistic-brownian-2d":
        y0 = np.asarray(x0, dtype=float)
        if y0.shape != (2,) or np.any(y0 <= 0) or np.any(y0 >= 1):
            raise InvalidParameterError("2d logistic-brownian start must lie in (0, 1)^2")
        incr = rng.standard_normal((times.size, 2)) * np.sqrt(dts)[:, None]
        return sigmoid(logit(y0)[None, :] + np.cumsum(incr, axis=0))
    raise InvalidParameterError(f"unknown proposal process {process!r}")


def _field_ratio(field, times, values, out_of_domain):
    """Quotient values along the path, with optional support auto-reject.

    Returns (ratios, forced_zero_mask). With out_of_domain="reject",
    spatially out-of-range points get ratio 0 (the target density vanishes
    beyond the clipped grid in the allele-frequency pipelines).
    """
    values = np.asarray(values, dtype=float)
    is_2d = isinstance(field.grid, Grid2D)
    if is_2d:
        inside = (
            (values[:, 0] >= field.grid.x_min)
            & (values[:, 0] <= field.grid.x_max)
            & (values[:, 1] >= field.grid.y_min)
            & (values[:, 1] <= field.grid.y_max)
        )
    else:
        inside = (values >= field.grid.x_min) & (values <= field.grid.x_max)
    if not np.all(inside):
        if out_of_domain == "error":
            bad = int(np.flatnonzero(~inside)[0])
            raise DomainError(
                f"path point {bad} at ({times[bad]}, {values[bad]}) outside the field domain"
            )
        ratios = np.zeros(times.size)
        idx = np.flatnonzero(inside)
        if idx.size:
            if is_2d:
                ratios[idx] = eval_field_2d(
                    field, values[idx, 0], values[idx, 1], times[idx]
                )
            else:
                ratios[idx] = eval_field(field, values[idx], times[idx])
        return ratios, ~inside
    if is_2d:
        return np.asarray(
            eval_field_2d(field, values[:, 0], values[:, 1], times), dtype=float
        ), np.zeros(times.size, dtype=bool)
    return np.asarray(eval_field(field, values, times), dtype=float), np.zeros(
        times.size, dtype=bool
    )


def rejection_pass(times, proposal_values, field, bound, seed, t0, x0,
                   attempt=0, out_of_domain="error"):
    """Accept each path point with probability V/c.

    Negative interpolated quotients are clamped to 0 and recorded as
    clamped rejections, as are points forced out by support clipping when
    ``out_of_domain="reject"``. The accept rule is u <= V_clamped / c.
    """
    times = _check_times(times, t0)
    ratios, forced = _field_ratio(field, times, proposal_values, out_of_domain)
    clamped = (ratios < 0.0) | forced
    ratios_eff = np.where(clamped, 0.0, ratios)
    rng = stream(seed, ROLE_UNIFORM, attempt)
    uniforms = rng.uniform(size=times.size)
    accept = uniforms <= ratios_eff / bound.value
    decisions = np.where(accept, ACCEPTED, np.where(clamped, CLAMPED_REJECTED, REJECTED))
    return PathSample(
        times=times,
        t0=float(t0),
        x0=x0,
        proposal_values=np.asarray(proposal_values, dtype=float),
        ratio_values=ratios_eff,
        uniforms=uniforms,
        decisions=decisions.astype(np.int8),
        bridged_values=None,
        seed=int(seed),
        attempt=int(attempt),
        bound_c=float(bound.value),
    )


def _bridge_segment(rng, t_left, x_left, t_right, x_right, ts, sigma):
    """Sequential exact draws of a scalar Brownian bridge at interior times."""
    out = np.empty(ts.size)
    t_prev, x_prev = t_left, x_left
    for i, t in enumerate(ts):
        w = (t - t_prev) / (t_right - t_prev)
        mean = x_prev + w * (x_right - x_prev)
        var = sigma**2 * (t_right - t) * (t - t_prev) / (t_right - t_prev)
        x_prev = mean + math.sqrt(var) * rng.standard_normal()
        out[i] = x_prev
        t_prev = t
    return out


def _bridge_1d(rng, times, t0, x0, values, decisions, sigma):
    bridged = values.copy()
    acc = np.flatnonzero(decisions == ACCEPTED)
    if acc.size == 0:
        raise WholePathRejectedError("no accepted points to anchor bridges")
    anchors_t = np.concatenate([[t0], times[acc]])
    anchors_x = np.concatenate([[x0], values[acc]])
    bad = np.flatnonzero(decisions != ACCEPTED)
    for seg in range(anchors_t.size - 1):
        mask = (times[bad] > anchors_t[seg]) & (times[bad] < anchors_t[seg + 1])
        idx = bad[mask]
        if idx.size:
            bridged[idx] = _bridge_segment(
                rng, anchors_t[seg], anchors_x[seg], anchors_t[seg + 1],
                anchors_x[seg + 1], times[idx], sigma,
            )
    bridged[times > anchors_t[-1]] = np.nan  # truncated past the last accepted point
    return bridged


def bridge_infill(path, process, sigma=1.0):
    """Fill rejected points with exact bridge draws of the proposal process.

    Accepted entries are returned bitwise unchanged. Logistic processes are
    bridged in logit coordinates where the proposal is Brownian. Raises
    WholePathRejectedError when there is no accepted point to anchor on.
    """
    rng = stream(path.seed, ROLE_BRIDGE, path.attempt)
    if process == "brownian":
        return _bridge_1d(
            rng, path.times, path.t0, float(path.x0), path.proposal_values,
            path.decisions, sigma,
        )
    if process == "logistic-brownian":
        b = _bridge_1d(
            rng, path.times, path.t0, float(logit(path.x0)),
            logit(path.proposal_values), path.decisions, 1.0,
        )
        out = sigmoid(b)
        acc = path.decisions == ACCEPTED
        out[acc] = path.proposal_values[acc]  # bitwise, not through the logit round-trip
        return out
    if process == "logistic-brownian-2d":
        acc = path.decisions == ACCEPTED
        if not np.any(acc):
            raise WholePathRejectedError("no accepted points to anchor bridges")
        cols = []
        for c in range(2):
            b = _bridge_1d(
                rng, path.times, path.t0, float(logit(np.asarray(path.x0)[c])),
                logit(path.proposal_values[:, c]), path.decisions, 1.0,
            )
            cols.append(sigmoid(b))
        out = np.stack(cols, axis=1)
        out[acc] = path.proposal_values[acc]
        return out
    raise InvalidParameterError(f"unknown proposal process {process!r}")


def _padded_range(lo, hi, sq_diff_max, t_window, pad_fraction=0.10):
    pad = max(3.0 * math.sqrt(sq_diff_max * t_window), pad_fraction * (hi - lo))
    return lo - pad, hi + pad


@dataclass(frozen=True)
class SolverSettings:
    """Grid resolution knobs for the sampling pipelines."""

    m_space: int = 200
    n_time: int = 100
    mx: int = 41
    my: int = 41
    margin_beta: float = 0.05
    pad_fraction: float = 0.10
    retries: int = 50


def sample_ou_path(beta, sigma, x0, times, seed, settings=SolverSettings(),
                   bound=None, t0=0.0):
    """End-to-end pipeline for the mean-reverting target with driftless proposal.

    Solves the quotient PDE on a grid padded beyond the path extremes,
    accepts pointwise against the analytic envelope (default), and fills
    rejections with Brownian bridges. Retries with fresh proposal paths
    when every point is rejected.
    """
    times = _check_times(times, t0)
    t_window = times[-1] - t0
    diagnostics = {"attempts": 0, "acceptance_rates": []}
    for attempt in range(settings.retries):
        diagnostics["attempts"] = attempt + 1
        values = sample_proposal_path("brownian", x0, times, seed, sigma=sigma,
                                      t0=t0, attempt=attempt)
        lo, hi = min(values.min(), x0), max(values.max(), x0)
        lo, hi = _padded_range(lo, hi, sigma**2, t_window, settings.pad_fraction)
        grid = Grid1D(lo, hi, settings.m_space, t0, times[-1], settings.n_time)
        coeffs = ou_ratio_coefficients(beta, sigma, x0, t0)
        field = solve_ratio_1d(coeffs, grid)
        if bound is None:
            x_max = max(abs(lo), abs(hi))
            spec = ou_analytic_bound(beta, x0, t_window, x_max)
        else:
            spec = bound
        path = rejection_pass(times, values, field, spec, seed, t0, x0, attempt=attempt)
        diagnostics["acceptance_rates"].append(path.acceptance_rate)
        if path.n_accepted:
            bridged = bridge_infill(path, "brownian", sigma=sigma)
            return replace(path, bridged_values=bridged)
    raise SamplingFailureError(
        f"no acceptable path after {settings.retries} attempts", diagnostics=diagnostics
    )


def _beta_window(values_logit, beta0, t_window, margin_beta, pad_fraction):
    """Padded logit-grid window clipped inside the tan/sec poles."""
    cap = BETA_POLE - margin_beta
    if np.any(np.abs(beta0) >= cap):
        raise InvalidParameterError("start point too close to the transformed-state boundary")
    lo = min(float(np.min(values_logit)), float(np.min(beta0)))
    hi = max(float(np.max(values_logit)), float(np.max(beta0)))
    lo, hi = _padded_range(lo, hi, 1.0, t_window, pad_fraction)
    lo, hi = max(lo, -cap), min(hi, cap)
    return lo, hi


def sample_wf1d_path(gamma, x0, times, seed, settings=SolverSettings(),
                     bound=None, t0=0.0):
    """End-to-end allele-frequency sampler, outputs in original coordinates.

    The target is mapped through the arcsine-logit transform onto the
    logistic-Brownian diffusion; proposal points landing outside the
    transformed target's support (beyond the tan/sec poles) are rejected
    outright. Outputs are mapped back with the inverse transform.
    """
    if not 0.0 < x0 < 1.0:
        raise InvalidParameterError("x0 must lie in (0, 1)")
    times = _check_times(times, t0)
    transform = arcsine_logit_transform()
    y0 = float(transform.forward(x0))
    t_window = times[-1] - t0
    diagnostics = {"attempts": 0, "acceptance_rates": []}
    for attempt in range(settings.retries):
        diagnostics["attempts"] = attempt + 1
        y_path = sample_proposal_path("logistic-brownian", y0, times, seed,
                                      t0=t0, attempt=attempt)
        blo, bhi = _beta_window(
            logit(y_path), np.array([logit(y0)]), t_window,
            settings.margin_beta, settings.pad_fraction,
        )
        grid = Grid1D(float(sigmoid(blo)), float(sigmoid(bhi)), settings.m_space,
                      t0, times[-1], settings.n_time)
        coeffs = wf1d_ratio_coefficients(gamma, y0, t0)
        field = solve_ratio_1d(coeffs, grid)
        spec = bound if bound is not None else empirical_bound(field)
        path = rejection_pass(times, y_path, field, spec, seed, t0, y0,
                              attempt=attempt, out_of_domain="reject")
        diagnostics["acceptance_rates"].append(path.acceptance_rate)
        if path.n_accepted:
            bridged_y = bridge_infill(path, "logistic-brownian")
            return replace(
                path,
                x0=float(x0),
                proposal_values=np.asarray(transform.inverse(y_path), dtype=float),
                bridged_values=np.asarray(transform.inverse(bridged_y), dtype=float),
            )
    raise SamplingFailureError(
        f"no acceptable path after {settings.retries} attempts", diagnostics=diagnostics
    )


def sample_wf2d_path(h_sel, x0, times, seed, settings=SolverSettings(),
                     bound=None, rho=0.0, t0=0.0):
    """Two-locus analogue of :func:`sample_wf1d_path`, componentwise transforms.

    The quotient PDE is solved in logit coordinates on a rectangle clipped
    inside the trigonometric poles; bridges act per coordinate.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (2,) or np.any(x0 <= 0) or np.any(x0 >= 1):
        raise InvalidParameterError("x0 must lie in (0, 1)^2")
    times = _check_times(times, t0)
    transform = arcsine_logit_transform()
    y0 = np.asarray(transform.forward(x0), dtype=float)
    beta0 = logit(y0)
    t_window = times[-1] - t0
    diagnostics = {"attempts": 0, "acceptance_rates": []}
    for attempt in range(settings.retries):
        diagnostics["attempts"] = attempt + 1
        y_path = sample_proposal_path("logistic-brownian-2d", y0, times, seed,
                                      t0=t0, attempt=attempt)
        beta_path = logit(y_path)
        xlo, xhi = _beta_window(beta_path[:, 0], beta0[:1], t_window,
                                settings.margin_beta, settings.pad_fraction)
        ylo, yhi = _beta_window(beta_path[:, 1], beta0[1:], t_window,
                                settings.margin_beta, settings.pad_fraction)
        n_time = Grid2D.steps_for(xlo, xhi, settings.mx, ylo, yhi, settings.my,
                                  t0, times[-1], settings.n_time)
        grid = Grid2D(xlo, xhi, settings.mx, ylo, yhi, settings.my,
                      t0, times[-1], n_time)
        coeffs = wf2d_ratio_coefficients(h_sel, beta0, rho=rho, t0=t0)
        field = solve_ratio_2d(coeffs, grid)
        spec = bound if bound is not None else empirical_bound(field)
        path = rejection_pass(times, beta_path, field, spec, seed, t0, y0,
                              attempt=attempt, out_of_domain="reject")
        diagnostics["acceptance_rates"].append(path.acceptance_rate)
        if path.n_accepted:
            path_y = replace(path, proposal_values=y_path)
            bridged_y = bridge_infill(path_y, "logistic-brownian-2d")
            return replace(
                path_y,
                x0=x0,
                proposal_values=np.asarray(transform.inverse(y_path), dtype=float),
                bridged_values=np.asarray(transform.inverse(bridged_y), dtype=float),
            )
    raise SamplingFailureError(
        f"no acceptable path after {settings.retries} attempts", diagnostics=diagnostics
    )


def write_path_csv(path_sample, out_path):
    """Serialise a PathSample as `t,proposal,ratio,uniform,decision,output` rows.

    Dimensioned columns get _1/_2 suffixes for 2D samples; missing trailing
    outputs (truncation past the last accepted point) are written as nan.
    """
    ps = path_sample
    two_d = ps.proposal_values.ndim == 2
    bridged = ps.bridged_values
    if bridged is None:
        bridged = np.full_like(ps.proposal_values, np.nan)
    with open(out_path, "w", encoding="utf-8") as fh:
        if two_d:
            fh.write("t,proposal_1,proposal_2,ratio,uniform,decision,output_1,output_2\n")
        else:
            fh.write("t,proposal,ratio,uniform,decision,output\n")
        for i, t in enumerate(ps.times):
            label = DECISION_LABELS[int(ps.decisions[i])]
            if two_d:
                fh.write(
                    f"{float(t)!r},{float(ps.proposal_values[i, 0])!r},"
                    f"{float(ps.proposal_values[i, 1])!r},{float(ps.ratio_values[i])!r},"
                    f"{float(ps.uniforms[i])!r},{label},"
                    f"{float(bridged[i, 0])!r},{float(bridged[i, 1])!r}\n"
                )
            else:
                fh.write(
                    f"{float(t)!r},{float(ps.proposal_values[i])!r},"
                    f"{float(ps.ratio_values[i])!r},{float(ps.uniforms[i])!r},"
                    f"{label},{float(bridged[i])!r}\n"
                )
