"""Coefficient builders: hand values, generic-vs-printed cross-checks, residuals."""

import numpy as np
import pytest

from ratiofield.errors import (
    IncompatibleModelsError,
    InvalidParameterError,
    SingularTimeError,
    TrigSingularityError,
)
from ratiofield.oracle import ou_exact_ratio
from ratiofield.processes import (
    brownian_model,
    logistic_brownian_density,
    logistic_brownian_model,
    ou_model,
    ou_transition_density,
    wf1d_model,
    wf1d_transformed_model,
)
from ratiofield.ratio_pde import (
    build_ratio_pde_1d,
    ou_ratio_coefficients,
    wf1d_ratio_coefficients,
    wf2d_ratio_coefficients,
)


def test_ou_coefficients_hand_values():
    co = ou_ratio_coefficients(1.0, 1.0, 0.0)
    # at (x=1, t=1): a = 1*(1 - 1) = 0, b = (1 - 1)*1 + 0 = 0, c = 1/2
    assert float(co.a(1.0, 1.0)) == pytest.approx(0.0, abs=1e-14)
    assert float(co.b(1.0, 1.0)) == pytest.approx(0.0, abs=1e-14)
    assert float(co.c(1.0, 1.0)) == pytest.approx(0.5)
    with pytest.raises(SingularTimeError):
        co.a(0.5, 0.0)


def test_ou_beta_zero_coefficients():
    co = ou_ratio_coefficients(0.0, 1.0, 0.3)
    xs = np.linspace(-2, 2, 9)
    assert np.allclose(co.a(xs, 0.7), 0.0)
    assert np.allclose(co.b(xs, 0.7), (0.3 - xs) / 0.7)


def test_generic_builder_matches_ou_closures():
    beta, sigma, x0 = 0.7, 1.3, 0.25
    target = ou_model(beta, sigma)
    proposal = brownian_model(sigma)
    density = ou_transition_density(0.0, sigma, x0)
    built = build_ratio_pde_1d(target, proposal, density)
    printed = ou_ratio_coefficients(beta, sigma, x0)
    rng = np.random.default_rng(3)
    xs = rng.uniform(-2.5, 2.5, 50)
    ts = rng.uniform(0.05, 2.0, 50)
    for fn_b, fn_p in ((built.a, printed.a), (built.b, printed.b), (built.c, printed.c)):
        assert np.max(np.abs(fn_b(xs, ts) - fn_p(xs, ts))) < 1e-8


def test_generic_builder_matches_wf_closures():
    gamma, y0 = 1.0, 0.5
    target = wf1d_transformed_model(gamma)
    proposal = logistic_brownian_model()
    density = logistic_brownian_density(0.0, y0)
    built = build_ratio_pde_1d(target, proposal, density)
    printed = wf1d_ratio_coefficients(gamma, y0)
    rng = np.random.default_rng(4)
    ys = rng.uniform(0.2, 0.8, 50)
    ts = rng.uniform(0.05, 1.0, 50)
    for fn_b, fn_p in ((built.a, printed.a), (built.b, printed.b), (built.c, printed.c)):
        assert np.max(np.abs(fn_b(ys, ts) - fn_p(ys, ts))) < 1e-8


def test_identical_models_zero_order_term_vanishes():
    m = ou_model(0.4, 1.0)
    density = ou_transition_density(0.4, 1.0, 0.1)
    co = build_ratio_pde_1d(m, m, density)
    rng = np.random.default_rng(9)
    xs = rng.uniform(-3, 3, 200)
    ts = rng.uniform(0.05, 1.5, 200)
    assert np.max(np.abs(co.a(xs, ts))) < 1e-12


def test_diffusion_mismatch_rejected():
    with pytest.raises(IncompatibleModelsError):
        build_ratio_pde_1d(ou_model(1.0, 1.0), brownian_model(2.0),
                           ou_transition_density(0.0, 2.0, 0.0))
    with pytest.raises(IncompatibleModelsError):
        build_ratio_pde_1d(wf1d_model(1.0), logistic_brownian_model(),
                           logistic_brownian_density(0.0, 0.5))


def test_wf1d_printed_hand_values():
    co = wf1d_ratio_coefficients(0.0, 0.5)
    assert float(co.a(0.5, 1.0)) == pytest.approx(0.5)
    assert float(co.c(0.5, 1.0)) == pytest.approx(0.03125)
    with pytest.raises(SingularTimeError):
        co.b(0.5, 0.0)


def test_numeric_derivative_fallback_close_to_analytic():
    gamma = 0.8
    tr = wf1d_transformed_model(gamma)
    stripped = type(tr)(
        dim=1, drift=tr.drift, sq_diffusion=tr.sq_diffusion,
        state_space=tr.state_space, label="stripped",
    )
    density = logistic_brownian_density(0.0, 0.5)
    exact = build_ratio_pde_1d(tr, logistic_brownian_model(), density)
    numeric = build_ratio_pde_1d(stripped, logistic_brownian_model(), density)
    ys = np.linspace(0.25, 0.75, 21)
    assert np.max(np.abs(exact.a(ys, 0.5) - numeric.a(ys, 0.5))) < 1e-6


def test_wf2d_hand_values_and_symmetry():
    co = wf2d_ratio_coefficients(0.0, (0.0, 0.0), rho=0.0)
    assert float(co.eps(0.0, 0.0, 1.0)) == pytest.approx(0.5)
    assert float(co.cx(0.0, 0.0, 1.0)) == pytest.approx(0.0)
    assert float(co.dy(0.0, 0.0, 1.0)) == pytest.approx(0.0)
    assert co.alpha == 0.5

    a = wf2d_ratio_coefficients(1.3, (0.2, -0.4), rho=0.1)
    b = wf2d_ratio_coefficients(1.3, (-0.4, 0.2), rho=0.1)
    rng = np.random.default_rng(11)
    xs = rng.uniform(-1.3, 1.3, 50)
    ys = rng.uniform(-1.3, 1.3, 50)
    ts = rng.uniform(0.1, 1.0, 50)
    assert np.allclose(a.eps(xs, ys, ts), b.eps(ys, xs, ts), atol=1e-12)
    assert np.allclose(a.cx(xs, ys, ts), b.dy(ys, xs, ts), atol=1e-12)
    assert np.allclose(a.dy(xs, ys, ts), b.cx(ys, xs, ts), atol=1e-12)


def test_wf2d_rho_continuity_at_zero():
    a = wf2d_ratio_coefficients(2.0, (0.1, 0.3), rho=0.0)
    b = wf2d_ratio_coefficients(2.0, (0.1, 0.3), rho=1e-8)
    rng = np.random.default_rng(13)
    xs = rng.uniform(-1.4, 1.4, 50)
    ys = rng.uniform(-1.4, 1.4, 50)
    ts = rng.uniform(0.1, 1.0, 50)
    for fa, fb in ((a.eps, b.eps), (a.cx, b.cx), (a.dy, b.dy)):
        assert np.max(np.abs(fa(xs, ys, ts) - fb(xs, ys, ts))) < 1e-6


def test_wf2d_errors():
    with pytest.raises(InvalidParameterError):
        wf2d_ratio_coefficients(1.0, (0.0, 0.0), rho=1.5)
    co = wf2d_ratio_coefficients(1.0, (0.0, 0.0))
    with pytest.raises(SingularTimeError):
        co.eps(0.1, 0.1, 0.0)
    with pytest.raises(TrigSingularityError):
        co.eps(np.pi / 2, 0.1, 1.0)


def test_exact_ratio_satisfies_pde_at_second_order():
    """Finite differences of the closed-form quotient plugged into the PDE;
    the residual must vanish at second order in the step."""
    beta, sigma, x0 = 0.8, 1.0, 0.2
    co = ou_ratio_coefficients(beta, sigma, x0)
    rng = np.random.default_rng(21)
    xs = rng.uniform(-1.5, 1.5, 40)
    ts = rng.uniform(0.3, 1.2, 40)

    def residual(step):
        v = lambda x, t: ou_exact_ratio(beta, sigma, x0, x, t)  # noqa: E731
        vt = (v(xs, ts + step) - v(xs, ts - step)) / (2 * step)
        vx = (v(xs + step, ts) - v(xs - step, ts)) / (2 * step)
        vxx = (v(xs + step, ts) - 2 * v(xs, ts) + v(xs - step, ts)) / step**2
        return np.max(np.abs(vt - co.a(xs, ts) * v(xs, ts) - co.b(xs, ts) * vx
                             - co.c(xs, ts) * vxx))

    res = np.array([residual(s) for s in (1e-2, 5e-3, 2.5e-3)])
    orders = np.log2(res[:-1] / res[1:])
    assert np.all(orders > 1.8)
