"""LP relaxations and branch-and-bound over the model's binary variables."""

from .branch_and_bound import BnbNode, branch_select, solve_milp
from .config import DEFAULT_TOLERANCES, Tolerances
from .lp import AUTO_SIMPLEX_MAX_ROWS, LpSolution, SimplexError, solve_lp

__all__ = [
    "AUTO_SIMPLEX_MAX_ROWS",
    "BnbNode",
    "DEFAULT_TOLERANCES",
    "LpSolution",
    "SimplexError",
    "Tolerances",
    "branch_select",
    "solve_lp",
    "solve_milp",
]
