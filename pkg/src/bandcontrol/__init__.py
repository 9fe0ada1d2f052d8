"""Band policies for a drifting Brownian stock level, with solvers and a Monte Carlo check."""

from .errors import DomainError, InvalidParameterError, NumericError, UnsupportedError
from .evaluator import Evaluation, evaluate, evaluate_impulse, evaluate_singular, extend_value_function
from .gcurve import GCurve, compute_Bbar, compute_Bbar1, eval_F1, eval_g, eval_g_prime, find_extrema
from .impulse_solver import BandPolicy, Solution, solve_impulse
from .model import (HoldingCost, ProblemSpec, make_custom_holding, make_linear_holding,
                    make_power_holding, make_quadratic_holding, reflect, validate_spec,
                    zero_holding)
from .nonneg_solver import solve_nonneg
from .qvi import GridSpec, VerifyReport, verify
from .simulator import SimConfig, SimResult, simulate
from .singular_solver import solve_singular

__version__ = "0.1.0"


def solve(spec: ProblemSpec, **kw) -> Solution:
    """Dispatch on ``spec.mode``."""
    if spec.mode == "singular":
        return solve_singular(spec, **kw)
    if spec.mode == "nonneg-impulse":
        return solve_nonneg(spec, **kw)
    return solve_impulse(spec, **kw)


__all__ = [
    "BandPolicy", "DomainError", "Evaluation", "GCurve", "GridSpec", "HoldingCost",
    "InvalidParameterError", "NumericError", "ProblemSpec", "SimConfig", "SimResult",
    "Solution", "UnsupportedError", "VerifyReport", "compute_Bbar", "compute_Bbar1",
    "eval_F1", "eval_g", "eval_g_prime", "evaluate", "evaluate_impulse", "evaluate_singular",
    "extend_value_function", "find_extrema", "make_custom_holding", "make_linear_holding",
    "make_power_holding", "make_quadratic_holding", "reflect", "simulate", "solve",
    "solve_impulse", "solve_nonneg", "solve_singular", "validate_spec", "verify",
    "zero_holding",
]
