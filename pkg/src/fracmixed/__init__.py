"""Solver for a mixed problem: Caputo fractional diffusion in the unit square glued to the
wave equation in three characteristic triangles, with a non-local condition on the characteristics."""

from fracmixed.assembler import DiscretizationConfig, SolutionField, inject_fault, solve_problem, verify_conditions
from fracmixed.errors import FracMixedError, NumericalError, ValidationError
from fracmixed.exprlang import Expression, parse
from fracmixed.problem import FunctionData, ProblemSpec, constant_problem, generic_problem, linear_problem
from fracmixed.specfun import mittag_leffler, recip_gamma, wright_e, wright_params

__all__ = [
    "DiscretizationConfig",
    "Expression",
    "FracMixedError",
    "FunctionData",
    "NumericalError",
    "ProblemSpec",
    "SolutionField",
    "ValidationError",
    "constant_problem",
    "generic_problem",
    "inject_fault",
    "linear_problem",
    "mittag_leffler",
    "parse",
    "recip_gamma",
    "solve_problem",
    "verify_conditions",
    "wright_e",
    "wright_params",
]
