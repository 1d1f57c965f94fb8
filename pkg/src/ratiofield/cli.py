"""Command-line front-end.

Five subcommands wire configs to the pipeline and emit figure-ready CSV
plus JSON artifacts:

    solve-ratio   quotient field along/around a proposal path -> field.csv
    sample        end-to-end pointwise rejection sampling -> path_*.csv
    validate-ou   PDE field vs closed-form quotient over a beta sweep
    convergence   scheme-verification order fits
    mc-compare    pooled accepted samples vs reference distributions

Every command writes manifest.json holding the fully resolved config and
seeds; pointing --config at a manifest reproduces the run byte-for-byte
(timings live only in the manifest). Config and IO errors exit with
status 2 and a machine-readable JSON error on stdout.
"""

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .config import ConfigError, compile_expression, load_config, require
from .errors import InvalidParameterError, SamplingFailureError
from .oracle import euler_maruyama, ks_statistic, ou_exact_ratio, ou_ratio_bound
from .processes import SdeModel, REAL_LINE, brownian_model, ou_model, ou_transition_density, sigmoid, wf1d_model
from .ratio_pde import build_ratio_pde_1d, ou_ratio_coefficients, wf1d_ratio_coefficients, wf2d_ratio_coefficients
from .sampler import (
    BoundSpec,
    SolverSettings,
    sample_ou_path,
    sample_proposal_path,
    sample_wf1d_path,
    sample_wf2d_path,
    write_path_csv,
)
from .solver1d import Grid1D, RatioField, eval_field, solve_ratio_1d, write_field_csv
from .solver2d import Grid2D, normalized_values, solve_ratio_2d, write_field2d_csv
from .validation import (
    ou_target_cdf,
    pool_ou_accepted,
    pool_wf1d_accepted,
    run_adi_heat_space_levels,
    run_adi_time_levels,
    run_cn_mms_levels,
)


def _fmt(v):
    return repr(float(v))


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, command, cfg, outputs, timings):
    manifest = {
        "command": command,
        "config": cfg,
        "outputs": sorted(outputs),
        "backend": BACKEND,
        "version": __version__,
        "timings": timings,
    }
    _write_json(out_dir / "manifest.json", manifest)


def _derived_seed(root, index):
    return int(np.random.SeedSequence((int(root), int(index))).generate_state(1)[0])


def _path_times(cfg):
    t0 = cfg.get("t0", 0.0)
    t_end = require(cfg, "t_end")
    n_times = cfg.get("n_times", 50)
    if not t_end > t0:
        raise ConfigError("t_end must exceed t0", key="t_end")
    return t0, np.linspace(t0 + (t_end - t0) / n_times, t_end, n_times)


def _x0_scalar(cfg, default=0.0):
    x0 = cfg.get("x0", [default])
    if len(x0) != 1:
        raise ConfigError("x0 must be a single value for 1D processes", key="x0")
    return float(x0[0])


def _x0_pair(cfg):
    x0 = cfg.get("x0", [0.5, 0.5])
    if len(x0) != 2:
        raise ConfigError("x0 must be two comma-separated values for wf2d", key="x0")
    return np.asarray(x0, dtype=float)


def _settings(cfg):
    return SolverSettings(
        m_space=cfg.get("m_space", 200),
        n_time=cfg.get("n_time", 100),
        mx=cfg.get("mx", 41),
        my=cfg.get("my", 41),
        margin_beta=cfg.get("margin_beta", 0.05),
        pad_fraction=cfg.get("pad_fraction", 0.10),
    )


def _bound_spec(cfg, analytic_builder=None):
    raw = cfg.get("bound", "analytic" if analytic_builder else "empirical")
    if raw == "analytic":
        if analytic_builder is None:
            raise ConfigError("no analytic bound for this process", key="bound")
        return None  # pipelines construct it from the grid
    if raw == "empirical":
        return "empirical"
    try:
        return BoundSpec(kind="user", value=float(raw))
    except ValueError:
        raise ConfigError(f"bound must be analytic, empirical or a number, got {raw!r}",
                          key="bound") from None


def _logit_halfwidth(cfg):
    cap = cfg.get("beta_cap", 6.0)
    margin = cfg.get("margin_beta", 0.05)
    return min(cap, np.pi / 2.0 - margin)


def _padded_bounds(values, x0, sq_max, t_window, cfg):
    lo = min(float(np.min(values)), x0)
    hi = max(float(np.max(values)), x0)
    if cfg.get("pad_mode", "padded") == "none":
        return lo, hi
    pad = max(3.0 * np.sqrt(sq_max * t_window), cfg.get("pad_fraction", 0.10) * (hi - lo))
    return lo - pad, hi + pad


def cmd_solve_ratio(cfg, args, out_dir):
    process = require(cfg, "process")
    seed = cfg.get("seed", 0)
    outputs = []
    if process == "ou":
        beta = require(cfg, "beta")
        sigma = cfg.get("sigma", 1.0)
        x0 = _x0_scalar(cfg)
        t0, times = _path_times(cfg)
        path = sample_proposal_path("brownian", x0, times, seed, sigma=sigma, t0=t0)
        lo, hi = _padded_bounds(path, x0, sigma**2, times[-1] - t0, cfg)
        grid = Grid1D(lo, hi, cfg.get("m_space", 300), t0, times[-1], cfg.get("n_time", 200))
        field = solve_ratio_1d(ou_ratio_coefficients(beta, sigma, x0, t0), grid)
        write_field_csv(field, out_dir / "field.csv")
        outputs.append("field.csv")
        if args.normalized or cfg.get("normalized", False):
            c = ou_ratio_bound(beta, x0, times[-1] - t0, max(abs(lo), abs(hi)))
            norm = RatioField(grid=grid, values=field.values / c,
                              boundary_value=field.boundary_value / c,
                              t_init_effective=field.t_init_effective)
            write_field_csv(norm, out_dir / "field_norm.csv")
            outputs.append("field_norm.csv")
    elif process == "wf1d":
        gamma = require(cfg, "gamma")
        x0 = _x0_scalar(cfg, default=0.5)
        t0, times = _path_times(cfg)
        transform_y0 = float(sigmoid(np.arcsin(2.0 * x0 - 1.0)))
        half = _logit_halfwidth(cfg)
        ylo, yhi = float(sigmoid(-half)), float(sigmoid(half))
        grid = Grid1D(ylo, yhi, cfg.get("m_space", 300), t0, times[-1], cfg.get("n_time", 200))
        field = solve_ratio_1d(wf1d_ratio_coefficients(gamma, transform_y0, t0), grid)
        write_field_csv(field, out_dir / "field.csv")
        outputs.append("field.csv")
        if args.normalized or cfg.get("normalized", False):
            peak = float(np.max(field.values))
            norm = RatioField(grid=grid, values=field.values / peak,
                              boundary_value=field.boundary_value / peak,
                              t_init_effective=field.t_init_effective)
            write_field_csv(norm, out_dir / "field_norm.csv")
            outputs.append("field_norm.csv")
    elif process == "wf2d":
        h_sel = require(cfg, "h_sel")
        rho = cfg.get("rho", 0.0)
        x0 = _x0_pair(cfg)
        beta0 = np.arcsin(2.0 * x0 - 1.0)  # logits of the transformed start
        t0 = cfg.get("t0", 0.0)
        t_end = require(cfg, "t_end")
        half = _logit_halfwidth(cfg)
        mx, my = cfg.get("mx", 40), cfg.get("my", 40)
        n = Grid2D.steps_for(-half, half, mx, -half, half, my, t0, t_end, cfg.get("n_time", 20))
        grid = Grid2D(-half, half, mx, -half, half, my, t0, t_end, n)
        field = solve_ratio_2d(wf2d_ratio_coefficients(h_sel, beta0, rho=rho, t0=t0), grid)
        write_field2d_csv(field, out_dir / "field.csv")
        outputs.append("field.csv")
        if args.normalized or cfg.get("normalized", False):
            write_field2d_csv(field, out_dir / "field_norm.csv", values=normalized_values(field))
            outputs.append("field_norm.csv")
        for step in cfg.get("snapshot_steps", []):
            if not 0 <= step <= grid.N:
                raise ConfigError(f"snapshot step {step} outside 0..{grid.N}",
                                  key="snapshot_steps")
            name = f"field_step_{step}.csv"
            _write_2d_snapshot(field, step, out_dir / name)
            outputs.append(name)
    elif process == "custom-1d":
        outputs.extend(_solve_custom_1d(cfg, out_dir))
    else:
        raise ConfigError(f"unknown process {process!r}", key="process")
    return outputs


def _write_2d_snapshot(field, step, path):
    g = field.grid
    xs, ys = g.nodes_x(), g.nodes_y()
    t = g.times()[step]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,y,V\n")
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                fh.write(f"{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(field.values[step, i, j])}\n")


def _solve_custom_1d(cfg, out_dir):
    drift_src = require(cfg, "custom_target_drift")
    sq_src = require(cfg, "custom_sq_diffusion")
    proposal_id = cfg.get("custom_proposal", "brownian")
    x_min = require(cfg, "x_min")
    x_max = require(cfg, "x_max")
    t0 = cfg.get("t0", 0.0)
    t_end = require(cfg, "t_end")
    x0 = _x0_scalar(cfg)
    sigma = cfg.get("sigma", 1.0)
    drift_fn = compile_expression(drift_src, ("x", "t"))
    sq_fn = compile_expression(sq_src, ("x",))
    target = SdeModel(
        dim=1,
        drift=lambda x, t: np.broadcast_to(np.asarray(drift_fn(x, t), dtype=float),
                                           np.shape(x)),
        sq_diffusion=lambda x: np.broadcast_to(np.asarray(sq_fn(x), dtype=float),
                                               np.shape(x)),
        state_space=REAL_LINE,
        label="custom-1d",
    )
    if proposal_id == "brownian":
        proposal = brownian_model(sigma)
        density = ou_transition_density(0.0, sigma, x0, t0)
    elif proposal_id == "ou":
        proposal = ou_model(cfg.get("beta", 0.0), sigma)
        density = ou_transition_density(cfg.get("beta", 0.0), sigma, x0, t0)
    else:
        raise ConfigError(f"unknown custom proposal {proposal_id!r}", key="custom_proposal")
    coeffs = build_ratio_pde_1d(target, proposal, density)
    grid = Grid1D(x_min, x_max, cfg.get("m_space", 300), t0, t_end, cfg.get("n_time", 200))
    field = solve_ratio_1d(coeffs, grid)
    write_field_csv(field, out_dir / "field.csv")
    return ["field.csv"]


def cmd_sample(cfg, args, out_dir):
    process = require(cfg, "process")
    seed = cfg.get("seed", 0)
    n_paths = cfg.get("n_paths", 1)
    settings = _settings(cfg)
    t0, times = _path_times(cfg)
    outputs = []

    if process == "ou":
        beta = require(cfg, "beta")
        sigma = cfg.get("sigma", 1.0)
        x0 = _x0_scalar(cfg)
        bound = _bound_spec(cfg, analytic_builder=True)
        if bound == "empirical":
            raise ConfigError("the ou pipeline uses its analytic envelope; "
                              "set bound = analytic or a number", key="bound")

        def run(i):
            return sample_ou_path(beta, sigma, x0, times, _derived_seed(seed, i),
                                  settings=settings, bound=bound, t0=t0)

    elif process == "wf1d":
        gamma = require(cfg, "gamma")
        x0 = _x0_scalar(cfg, default=0.5)
        bound = _bound_spec(cfg)
        bound = None if bound == "empirical" else bound

        def run(i):
            return sample_wf1d_path(gamma, x0, times, _derived_seed(seed, i),
                                    settings=settings, bound=bound, t0=t0)

    elif process == "wf2d":
        h_sel = require(cfg, "h_sel")
        x0 = _x0_pair(cfg)
        rho = cfg.get("rho", 0.0)
        bound = _bound_spec(cfg)
        bound = None if bound == "empirical" else bound

        def run(i):
            return sample_wf2d_path(h_sel, x0, times, _derived_seed(seed, i),
                                    settings=settings, bound=bound, rho=rho, t0=t0)

    else:
        raise ConfigError(f"unknown process {process!r}", key="process")

    results = [None] * n_paths
    failures = []

    def worker(i):
        try:
            return i, run(i), None
        except SamplingFailureError as exc:
            return i, None, {"path": i, "error": str(exc), "diagnostics": exc.diagnostics}

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for i, res, fail in pool.map(worker, range(n_paths)):
                results[i] = res
                if fail:
                    failures.append(fail)
    else:
        for i in range(n_paths):
            _, res, fail = worker(i)
            results[i] = res
            if fail:
                failures.append(fail)

    rates = []
    bounds = []
    attempts = []
    for i, res in enumerate(results):
        if res is None:
            continue
        name = f"path_{i:03d}.csv"
        write_path_csv(res, out_dir / name)
        outputs.append(name)
        rates.append(res.acceptance_rate)
        bounds.append(res.bound_c)
        attempts.append(res.attempt + 1)
    summary = {
        "process": process,
        "n_paths": n_paths,
        "n_failed": len(failures),
        "failures": failures,
        "acceptance_rate_mean": float(np.mean(rates)) if rates else 0.0,
        "acceptance_rates": rates,
        "bounds": bounds,
        "attempts": attempts,
        "seed": seed,
    }
    _write_json(out_dir / "summary.json", summary)
    outputs.append("summary.json")
    return outputs


def cmd_validate_ou(cfg, args, out_dir):
    betas = require(cfg, "betas")
    if not betas:
        raise ConfigError("betas sweep must be non-empty", key="betas")
    sigma = cfg.get("sigma", 1.0)
    x0 = _x0_scalar(cfg)
    seed = cfg.get("seed", 0)
    t0, times = _path_times(cfg)
    path = sample_proposal_path("brownian", x0, times, seed, sigma=sigma, t0=t0)
    lo, hi = _padded_bounds(path, x0, sigma**2, times[-1] - t0, cfg)
    grid = Grid1D(lo, hi, cfg.get("m_space", 300), t0, times[-1], cfg.get("n_time", 200))
    rows = []
    for beta in betas:
        field = solve_ratio_1d(ou_ratio_coefficients(beta, sigma, x0, t0), grid)
        v_pde = eval_field(field, path, times)
        v_exact = ou_exact_ratio(beta, sigma, x0, path, times, t0)
        err = np.abs(np.asarray(v_pde) - np.asarray(v_exact))
        rows.append((beta, float(np.max(err)), float(np.mean(err))))
    with open(out_dir / "errors.csv", "w", encoding="utf-8") as fh:
        fh.write("beta,max_abs_err,mean_abs_err\n")
        for beta, mx, mean in rows:
            fh.write(f"{_fmt(beta)},{_fmt(mx)},{_fmt(mean)}\n")
    return ["errors.csv"]


def cmd_convergence(cfg, args, out_dir):
    problem = args.problem or cfg.get("problem")
    if not problem:
        raise ConfigError("missing required config key 'problem'", key="problem")
    rows_out = []
    if problem == "cn-mms-1d":
        rows, order = run_cn_mms_levels()
        rows_out += [("cn-mms-1d", "joint-hk", r["m"], r["n"], r["step"], r["error"], order)
                     for r in rows]
    elif problem == "adi-heat-2d":
        rows, order = run_adi_heat_space_levels()
        rows_out += [("adi-heat-2d", "space", r["m"], r["n"], r["step"], r["error"], order)
                     for r in rows]
        rows_t, order_t = run_adi_time_levels()
        rows_out += [("adi-heat-2d", "time", r["m"], r["n"], r["step"], r["error"], order_t)
                     for r in rows_t]
    else:
        raise ConfigError(f"unknown convergence problem {problem!r}", key="problem")
    with open(out_dir / "orders.csv", "w", encoding="utf-8") as fh:
        fh.write("problem,axis,m,n,step,error,fitted_order\n")
        for prob, axis, m, n, step, err, order in rows_out:
            fh.write(f"{prob},{axis},{m},{n},{_fmt(step)},{_fmt(err)},{_fmt(order)}\n")
    return ["orders.csv"]


def cmd_mc_compare(cfg, args, out_dir):
    mode = require(cfg, "mode")
    seed = cfg.get("seed", 0)
    t_end = cfg.get("t_end", 1.0)
    n_times = cfg.get("n_times", 10)
    pool_target = cfg.get("pool_target", 20000)
    report = {"mode": mode, "seed": seed, "t_end": t_end}
    if mode in ("ou-exact", "ou-pde"):
        beta = require(cfg, "beta")
        sigma = cfg.get("sigma", 1.0)
        x0 = _x0_scalar(cfg)
        samples, info = pool_ou_accepted(
            beta, sigma, x0, t_end, n_times, pool_target, seed,
            ratio="exact" if mode == "ou-exact" else "pde",
            m_space=cfg.get("m_space", 300), n_time=cfg.get("n_time", 200),
        )
        ks = ks_statistic(samples, ou_target_cdf(beta, sigma, x0, t_end))
        report.update(info)
        report["ks"] = float(ks)
        report["reference"] = "closed-form target marginal"
    elif mode == "wf1d":
        gamma = require(cfg, "gamma")
        x0 = _x0_scalar(cfg, default=0.5)
        samples, info = pool_wf1d_accepted(
            gamma, x0, t_end, n_times, pool_target, seed,
            m_space=cfg.get("m_space", 320), n_time=cfg.get("n_time", 160),
            margin_beta=cfg.get("margin_beta", 0.05),
        )
        oracle = euler_maruyama(wf1d_model(gamma), x0, t_end,
                                cfg.get("oracle_dt", 1e-4),
                                cfg.get("oracle_paths", 100000),
                                seed=_derived_seed(seed, 999), clip=(1e-9, 1 - 1e-9))
        ks = ks_statistic(samples, oracle)
        report.update(info)
        report["ks"] = float(ks)
        report["reference"] = "euler-maruyama oracle (full law incl. boundary mass)"
    else:
        raise ConfigError(f"unknown mc-compare mode {mode!r}", key="mode")
    _write_json(out_dir / "ks_report.json", report)
    return ["ks_report.json"]


COMMANDS = {
    "solve-ratio": cmd_solve_ratio,
    "sample": cmd_sample,
    "validate-ou": cmd_validate_ou,
    "convergence": cmd_convergence,
    "mc-compare": cmd_mc_compare,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ratiofield",
        description="Rejection sampling for diffusions via density-quotient fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="config file or run manifest", default=None)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker cap for per-path work")
        p.add_argument("--normalized", action="store_true",
                       help="also emit the display-normalized field")
        if name == "convergence":
            p.add_argument("--problem", default=None, help="problem id")
    args = parser.parse_args(argv)

    try:
        if args.command == "convergence" and args.config is None:
            cfg = {}
        elif args.config is None:
            raise ConfigError("missing --config", key="config")
        else:
            cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        t_start = time.perf_counter()
        outputs = COMMANDS[args.command](cfg, args, out_dir)
        timings = {"total_seconds": time.perf_counter() - t_start}
        _write_manifest(out_dir, args.command, cfg, outputs, timings)
    except (ConfigError, InvalidParameterError, FileNotFoundError) as exc:
        err = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, ConfigError) and exc.key:
            err["error"]["key"] = exc.key
        print(json.dumps(err), file=sys.stdout)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected failure path
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
