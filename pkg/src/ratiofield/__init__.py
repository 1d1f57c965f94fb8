"""Rejection sampling for diffusions via numerically solved density-quotient fields.

The quotient V of target to proposal transition densities obeys a linear
parabolic PDE whenever the two diffusions share a squared diffusion
coefficient. This package builds the PDE's coefficient fields from model
pairs, solves them (Crank-Nicolson in 1D, high-order-compact ADI in 2D),
and uses the solved field for pointwise accept/reject sampling of exactly
drawn proposal paths, with diffusion-bridge infill of rejected points.
"""

from ._kernels import BACKEND as kernel_backend
from .oracle import EmpiricalDistribution, euler_maruyama, ks_statistic, ou_exact_ratio, ou_ratio_bound
from .processes import (
    AronsonReport,
    ClosedFormDensity,
    SdeModel,
    StateTransform,
    arcsine_logit_transform,
    bivariate_logistic_density,
    brownian_model,
    check_aronson_preconditions,
    logistic_brownian_density,
    logistic_brownian_model,
    ou_model,
    ou_transition_density,
    sigmoid_transform,
    transform_density,
    wf1d_model,
    wf1d_transformed_model,
    wf2d_models,
)
from .ratio_pde import (
    RatioCoefficients1D,
    RatioCoefficients2D,
    build_ratio_pde_1d,
    ou_ratio_coefficients,
    wf1d_ratio_coefficients,
    wf2d_ratio_coefficients,
)
from .sampler import (
    BoundSpec,
    PathSample,
    SolverSettings,
    bridge_infill,
    empirical_bound,
    ou_analytic_bound,
    rejection_pass,
    sample_ou_path,
    sample_proposal_path,
    sample_wf1d_path,
    sample_wf2d_path,
    write_path_csv,
)
from .solver1d import Grid1D, RatioField, cn_step, eval_field, solve_ratio_1d, write_field_csv
from .solver2d import (
    CompactOperators,
    Grid2D,
    RatioField2D,
    adi_step,
    assemble_operators,
    eval_field_2d,
    normalized_values,
    read_field2d_binary,
    solve_ratio_2d,
    write_field2d_binary,
    write_field2d_csv,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
