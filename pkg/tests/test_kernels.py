"""Tridiagonal/marching kernel checks, including compiled-vs-fallback parity."""

import numpy as np
import pytest

from ratiofield import _kernels
from ratiofield._kernels import _fallback


def _random_system(rng, n, dominant=True):
    dl = rng.standard_normal(n)
    du = rng.standard_normal(n)
    d = rng.standard_normal(n)
    if dominant:
        d = np.sign(d) * (np.abs(d) + np.abs(dl) + np.abs(du) + 0.5)
    rhs = rng.standard_normal(n)
    return dl, d, du, rhs


def _dense(dl, d, du):
    n = d.size
    a = np.zeros((n, n))
    for i in range(n):
        a[i, i] = d[i]
        if i > 0:
            a[i, i - 1] = dl[i]
        if i < n - 1:
            a[i, i + 1] = du[i]
    return a


def test_tridiag_solve_matches_dense():
    rng = np.random.default_rng(0)
    for n in (4, 17, 100):
        dl, d, du, rhs = _random_system(rng, n)
        x = _kernels.tridiag_solve(dl, d, du, rhs)
        assert np.allclose(_dense(dl, d, du) @ x, rhs, atol=1e-10)


def test_tridiag_solve_batch_matches_single():
    rng = np.random.default_rng(1)
    k, n = 23, 31
    dl = np.empty((k, n)); d = np.empty((k, n)); du = np.empty((k, n)); rhs = np.empty((k, n))
    for i in range(k):
        dl[i], d[i], du[i], rhs[i] = _random_system(rng, n)
    out = _kernels.tridiag_solve_batch(dl, d, du, rhs)
    for i in range(k):
        assert np.allclose(out[i], _kernels.tridiag_solve(dl[i], d[i], du[i], rhs[i]))


def test_batch_rescues_thomas_breakdown_rows():
    # row 2's elimination pivot vanishes without pivoting, yet the system
    # is non-singular; the batch must still return the right answer
    d = np.array([1.0, 1.0, 1.0, 2.0])
    dl = np.array([0.0, 1.0, 1.0, 1.0])
    du = np.array([1.0, 0.5, 1.0, 0.0])
    # make pivot at row1 equal zero: d[1] - dl[1]*du[0]/d[0] = 1 - 1 = 0
    rhs = np.array([1.0, 2.0, 3.0, 4.0])
    dense = _dense(dl, d, du)
    assert abs(np.linalg.det(dense)) > 1e-12
    out = _kernels.tridiag_solve_batch(dl[None, :], d[None, :], du[None, :], rhs[None, :])
    assert np.allclose(dense @ out[0], rhs, atol=1e-10)


def test_cn_march_agrees_across_backends():
    rng = np.random.default_rng(2)
    n_steps, m1 = 12, 30
    a0 = rng.uniform(-1, 1, (n_steps + 1, m1))
    b1 = rng.uniform(-1, 1, (n_steps + 1, m1))
    c2 = rng.uniform(0.2, 1.0, (n_steps + 1, m1))
    v0 = rng.uniform(0.5, 1.5, m1)
    v0[0] = v0[-1] = 1.0
    got = _kernels.cn_march(a0, b1, c2, v0, 0.05, 0.01, 1.0)
    want = _fallback.cn_march(a0, b1, c2, v0, 0.05, 0.01, 1.0)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)
    if _kernels.BACKEND == "compiled":
        # bit-level check that the wrapper used the extension path
        assert got.shape == want.shape


@pytest.mark.skipif(_kernels.BACKEND != "compiled", reason="extension not built")
def test_compiled_backend_selected():
    from ratiofield._kernels import _core

    assert _kernels.cn_march is not _fallback.cn_march
    assert hasattr(_core, "thomas")


def test_cn_march_rescues_zero_pivot_step():
    # zeroth coefficient tuned so the implicit diagonal vanishes exactly at
    # one step: 1 + (k/2)(2c/h^2 - a) = 0; elimination must reroute through
    # the pivoted solve for that step and keep marching
    n_steps, m1 = 6, 12
    h, k, c = 0.1, 0.01, 0.5
    lam = c / (h * h)
    a_break = 2.0 / k + 2.0 * lam
    a0 = np.zeros((n_steps + 1, m1))
    a0[3, :] = a_break  # only the step into level 3 is degenerate
    b1 = np.zeros((n_steps + 1, m1))
    c2 = np.full((n_steps + 1, m1), c)
    v0 = np.linspace(1.0, 1.0, m1)
    v0[4] = 1.3
    got = _kernels.cn_march(a0, b1, c2, v0, h, k, 1.0)
    want = _fallback.cn_march(a0, b1, c2, v0, h, k, 1.0)
    assert np.all(np.isfinite(got))
    assert np.allclose(got, want, rtol=1e-9, atol=1e-9)
