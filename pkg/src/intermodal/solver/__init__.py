"""In-repo LP/MILP solver: revised simplex plus best-bound branch-and-bound."""

from .bnb import MipResult, SolverConfig, relative_gap, solve_milp
from .check import SolutionViolation, check_solution
from .kernels import BACKEND
from .lp import LpSolution, solve_dense, solve_lp

__all__ = [
    "BACKEND", "LpSolution", "MipResult", "SolutionViolation", "SolverConfig", "check_solution",
    "relative_gap", "solve_dense", "solve_lp", "solve_milp",
]
