"""Optimal dividend barriers for bulk-arrival compound Poisson risk models.

The pipeline: assemble a risk model from a bulk-count law and a claim
law, evaluate its Laplace exponent, recover the q-scale function by
transform inversion (exact partial fractions where the transform is
rational), locate the barrier b* at the global minimum of W', certify
optimality from distributional shape conditions, and cross-check every
analytic value with a path simulator.
"""

from .distributions import (
    ClaimDistribution,
    CompoundClaimDistribution,
    CountingCompounder,
    Degenerate,
    EmpiricalDensity,
    Erlang,
    ExplicitPmf,
    Exponential,
    GeneralizedLogarithmic,
    Geometric,
    HyperExponential,
    Logarithmic,
    MixtureOfErlangs,
    compound_cdf,
    counting_pmf,
    exp_claims_tail,
    negative_binomial_pmf,
    polya_aeppli_pmf,
)
from .errors import (
    ConfigError,
    DegenerateBarrierError,
    EvaluationError,
    ExtrapolationError,
    GridTooShortError,
    InsufficientDataError,
    ParameterError,
)
from .exponent import ExponentEvaluator, RiskModel, psi, rho_root
from .inversion import InversionSettings, euler_inversion, talbot_inversion
from .optimize import (
    BarrierPolicy,
    OptimalityCertificate,
    barrier_value,
    certify_optimality,
    find_b_star,
    value_function,
)
from .scale import ScaleFunctionGrid, build_scale_grid, default_x_max, scale_derivative
from .shapes import (
    Holds,
    ShapeVerdict,
    check_density_cm,
    check_dfr,
    check_discrete_cm,
    check_discrete_dfr,
    check_discrete_log_convex,
    check_log_convex_density,
)
from .simulate import (
    SimulationConfig,
    SimulationResult,
    simulate_counting,
    simulate_dividends,
    simulate_value_curve,
    trace_path,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierPolicy",
    "ClaimDistribution",
    "CompoundClaimDistribution",
    "ConfigError",
    "CountingCompounder",
    "Degenerate",
    "DegenerateBarrierError",
    "EmpiricalDensity",
    "Erlang",
    "EvaluationError",
    "ExplicitPmf",
    "Exponential",
    "ExponentEvaluator",
    "ExtrapolationError",
    "GeneralizedLogarithmic",
    "Geometric",
    "GridTooShortError",
    "Holds",
    "HyperExponential",
    "InsufficientDataError",
    "InversionSettings",
    "Logarithmic",
    "MixtureOfErlangs",
    "OptimalityCertificate",
    "ParameterError",
    "RiskModel",
    "ScaleFunctionGrid",
    "ShapeVerdict",
    "SimulationConfig",
    "SimulationResult",
    "barrier_value",
    "build_scale_grid",
    "certify_optimality",
    "check_density_cm",
    "check_dfr",
    "check_discrete_cm",
    "check_discrete_dfr",
    "check_discrete_log_convex",
    "check_log_convex_density",
    "compound_cdf",
    "counting_pmf",
    "default_x_max",
    "euler_inversion",
    "exp_claims_tail",
    "find_b_star",
    "negative_binomial_pmf",
    "polya_aeppli_pmf",
    "psi",
    "rho_root",
    "scale_derivative",
    "simulate_counting",
    "simulate_dividends",
    "simulate_value_curve",
    "talbot_inversion",
    "trace_path",
    "value_function",
]
