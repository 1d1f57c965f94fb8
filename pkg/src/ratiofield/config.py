"""Flat key = value experiment configs and their validation.

The on-disk format is one `key = value` assignment per line with `#`
comments, diff-friendly and language-agnostic. A run manifest (JSON with a
"config" object) is accepted anywhere a config file is, which is how runs
are reproduced byte-for-byte. Unknown keys are rejected.
"""

import ast
import json
import math

from .errors import InvalidParameterError


class ConfigError(InvalidParameterError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


def _parse_bool(s):
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s}")


def _parse_float_list(s):
    return [float(v) for v in str(s).split(",") if str(v).strip() != ""]


def _parse_int_list(s):
    return [int(v) for v in str(s).split(",") if str(v).strip() != ""]


# key -> (parser, description)
KEY_SCHEMA = {
    "process": (str, "ou | wf1d | wf2d | custom-1d"),
    "beta": (float, "mean-reversion rate of the ou target"),
    "sigma": (float, "diffusion coefficient of the ou/brownian pair"),
    "gamma": (float, "selection coefficient of the 1D allele-frequency target"),
    "h_sel": (float, "selection coefficient of the 2D target"),
    "rho": (float, "logit-coordinate correlation of the 2D proposal density"),
    "x0": (_parse_float_list, "start state (one or two comma-separated values)"),
    "t0": (float, "segment start time"),
    "t_end": (float, "segment end time"),
    "n_times": (int, "number of path sample times on (t0, t_end]"),
    "m_space": (int, "1D spatial subintervals"),
    "n_time": (int, "time subintervals"),
    "mx": (int, "2D spatial subintervals, first axis"),
    "my": (int, "2D spatial subintervals, second axis"),
    "pad_mode": (str, "padded | none (grid beyond the path extremes or not)"),
    "pad_fraction": (float, "relative pad when pad_mode=padded"),
    "margin_beta": (float, "logit-grid margin kept away from the tan/sec poles"),
    "beta_cap": (float, "absolute logit-grid half-width cap"),
    "bound": (str, "analytic | empirical | a positive number (user bound)"),
    "seed": (int, "root seed"),
    "n_paths": (int, "number of proposal paths"),
    "betas": (_parse_float_list, "sweep values for validate-ou"),
    "problem": (str, "convergence problem id"),
    "mode": (str, "mc-compare mode: ou-exact | ou-pde | wf1d"),
    "pool_target": (int, "minimum pooled accepted-sample count"),
    "oracle_paths": (int, "Euler-Maruyama oracle path count"),
    "oracle_dt": (float, "Euler-Maruyama oracle step"),
    "snapshot_steps": (_parse_int_list, "2D field step indices written separately"),
    "normalized": (_parse_bool, "also write the display-normalized field"),
    "custom_target_drift": (str, "expression in x, t for the custom 1D target drift"),
    "custom_sq_diffusion": (str, "expression in x for the shared squared diffusion"),
    "custom_proposal": (str, "catalog proposal id for custom-1d: brownian | ou"),
    "x_min": (float, "explicit grid lower edge (custom-1d)"),
    "x_max": (float, "explicit grid upper edge (custom-1d)"),
}


def parse_config_text(text):
    """Parse `key = value` lines into a typed dict; unknown keys rejected."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in KEY_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}", key=key)
        parser = KEY_SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", key=key) from exc
    return values


def load_config(path):
    """Load a config file or a run manifest carrying a resolved config."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        manifest = json.loads(text)
        cfg = manifest.get("config")
        if not isinstance(cfg, dict):
            raise ConfigError("manifest JSON lacks a 'config' object", key="config")
        for key in cfg:
            if key not in KEY_SCHEMA:
                raise ConfigError(f"unknown config key {key!r}", key=key)
        return dict(cfg)
    return parse_config_text(text)


def require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing required config key {key!r}", key=key)
    return cfg[key]


_ALLOWED_CALLS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "tanh": math.tanh, "abs": abs,
    "arcsin": math.asin, "arctan": math.atan,
}
_ALLOWED_NAMES = {"pi": math.pi, "e": math.e}


def _check_expr(node, variables):
    if isinstance(node, ast.Expression):
        return _check_expr(node.body, variables)
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
        _check_expr(node.left, variables)
        _check_expr(node.right, variables)
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        return _check_expr(node.operand, variables)
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
            raise ConfigError(f"call not allowed in expression: {ast.dump(node.func)}")
        for arg in node.args:
            _check_expr(arg, variables)
        if node.keywords:
            raise ConfigError("keyword arguments not allowed in expressions")
        return
    if isinstance(node, ast.Name):
        if node.id in variables or node.id in _ALLOWED_NAMES:
            return
        raise ConfigError(f"unknown name in expression: {node.id!r}")
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return
    raise ConfigError(f"disallowed syntax in expression: {type(node).__name__}")


def compile_expression(source, variables=("x", "t")):
    """Compile a restricted arithmetic expression into a vectorizable closure.

    Permits the variables given, basic arithmetic, and a small whitelist of
    math functions; everything else is rejected at parse time.
    """
    import numpy as np

    tree = ast.parse(source, mode="eval")
    _check_expr(tree, set(variables))
    np_env = {
        "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
        "log": np.log, "sqrt": np.sqrt, "tanh": np.tanh, "abs": np.abs,
        "arcsin": np.arcsin, "arctan": np.arctan, "pi": np.pi, "e": np.e,
        "__builtins__": {},
    }
    code = compile(tree, "<config-expression>", "eval")

    def fn(*args):
        env = dict(np_env)
        env.update(zip(variables, args))
        return eval(code, env)  # noqa: S307  (AST-whitelisted above)

    return fn
