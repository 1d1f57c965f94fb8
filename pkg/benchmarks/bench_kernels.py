"""Benchmark: compiled kernels against the pure NumPy/SciPy fallback.

Times the two hot kernels (the Crank-Nicolson march and the batched
tridiagonal line solve that the 2D sweeps run on) plus one representative
end-to-end quotient solve under the active backend.

    python benchmarks/bench_kernels.py [--repeat 5]

The compiled extension is used when built; RATIOFIELD_PURE_PYTHON=1 forces
the fallback for the end-to-end row.
"""

import argparse
import time

import numpy as np

from ratiofield import _kernels
from ratiofield._kernels import _fallback
from ratiofield.ratio_pde import ou_ratio_coefficients
from ratiofield.solver1d import Grid1D, solve_ratio_1d


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_cn_march(repeat, n_steps=200, m1=301):
    rng = np.random.default_rng(0)
    a0 = rng.uniform(-1, 1, (n_steps + 1, m1))
    b1 = rng.uniform(-1, 1, (n_steps + 1, m1))
    c2 = rng.uniform(0.3, 1.0, (n_steps + 1, m1))
    v0 = np.ones(m1)
    args = (a0, b1, c2, v0, 0.03, 0.005, 1.0)
    rows = [("cn_march (fallback)", best_of(lambda: _fallback.cn_march(*args), repeat))]
    if _kernels.BACKEND == "compiled":
        assert np.allclose(_kernels.cn_march(*args), _fallback.cn_march(*args))
        rows.append(("cn_march (compiled)", best_of(lambda: _kernels.cn_march(*args), repeat)))
    return rows


def bench_tridiag_batch(repeat, k=400, n=400):
    rng = np.random.default_rng(1)
    dl = rng.standard_normal((k, n))
    du = rng.standard_normal((k, n))
    d = np.abs(rng.standard_normal((k, n))) + np.abs(dl) + np.abs(du) + 0.5
    rhs = rng.standard_normal((k, n))
    args = (dl, d, du, rhs)
    rows = [("tridiag_batch (fallback)",
             best_of(lambda: _fallback.tridiag_solve_batch(*args), repeat))]
    if _kernels.BACKEND == "compiled":
        assert np.allclose(_kernels.tridiag_solve_batch(*args),
                           _fallback.tridiag_solve_batch(*args))
        rows.append(("tridiag_batch (compiled)",
                     best_of(lambda: _kernels.tridiag_solve_batch(*args), repeat)))
    return rows


def bench_end_to_end(repeat):
    coeffs = ou_ratio_coefficients(0.05, 1.0, 0.0)
    grid = Grid1D(-5.0, 5.0, 300, 0.0, 1.0, 200)
    return [(f"solve_ratio_1d 300x200 ({_kernels.BACKEND})",
             best_of(lambda: solve_ratio_1d(coeffs, grid), repeat))]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"active kernel backend: {_kernels.BACKEND}")
    rows = []
    rows += bench_cn_march(args.repeat)
    rows += bench_tridiag_batch(args.repeat)
    rows += bench_end_to_end(args.repeat)
    width = max(len(name) for name, _ in rows)
    print(f"{'kernel':<{width}}  best of {args.repeat}")
    for name, t in rows:
        print(f"{name:<{width}}  {t * 1e3:9.3f} ms")
    pairs = {}
    for name, t in rows:
        key = name.split(" (")[0]
        pairs.setdefault(key, {})[name.rsplit("(", 1)[1].rstrip(")")] = t
    for key, versions in pairs.items():
        if {"compiled", "fallback"} <= versions.keys():
            print(f"{key}: compiled is {versions['fallback'] / versions['compiled']:.1f}x "
                  f"faster than fallback")


if __name__ == "__main__":
    main()
