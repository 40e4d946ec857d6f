"""LP engine selection.

``"simplex"`` is the in-house bounded-variable simplex. ``"highs"`` hands the
same relaxation to SciPy's HiGHS for horizons where a dense basis inverse
gets too large; ``"auto"`` picks by row count.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from ..formulation import MilpModel, Status
from .config import DEFAULT_TOLERANCES, Tolerances
from .simplex import LpSolution, SimplexError, simplex_solve

AUTO_SIMPLEX_MAX_ROWS = 400
ENGINES = ("auto", "simplex", "highs")


def _highs_solve(m: MilpModel, lb, ub, tol: Tolerances) -> LpSolution:
    A = m.A.tocsr()
    le = m.sense == "<"
    ge = m.sense == ">"
    eq = m.sense == "="
    A_ub = None
    b_ub = None
    if le.any() or ge.any():
        import scipy.sparse as sp

        A_ub = sp.vstack([A[le], -A[ge]], format="csr")
        b_ub = np.concatenate([m.rhs[le], -m.rhs[ge]])
    A_eq = A[eq] if eq.any() else None
    b_eq = m.rhs[eq] if eq.any() else None
    res = linprog(
        m.c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lb, ub]),
        method="highs",
        options={
            "primal_feasibility_tolerance": tol.feasibility,
            "dual_feasibility_tolerance": tol.feasibility,
        },
    )
    iterations = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        x = np.clip(res.x, lb, ub)
        return LpSolution(Status.OPTIMAL, x, float(m.c @ x), iterations)
    if res.status == 2:
        return LpSolution(Status.INFEASIBLE, None, np.nan, iterations)
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED, None, -np.inf, iterations)
    raise SimplexError(f"HiGHS failed: {res.message}")


def resolve_engine(m: MilpModel, engine: str) -> str:
    if engine not in ENGINES:
        raise ValueError(f"unknown LP engine {engine!r}; expected one of {ENGINES}")
    if engine == "auto":
        return "simplex" if m.n_rows <= AUTO_SIMPLEX_MAX_ROWS else "highs"
    return engine


def solve_lp(
    m: MilpModel,
    lb: np.ndarray | None = None,
    ub: np.ndarray | None = None,
    engine: str = "auto",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LpSolution:
    """Solve the continuous relaxation of ``m`` under optional overriding bounds."""
    lb = m.lb if lb is None else lb
    ub = m.ub if ub is None else ub
    if resolve_engine(m, engine) == "highs":
        if np.any(lb > ub + tol.feasibility):
            return LpSolution(Status.INFEASIBLE, None, np.nan)
        return _highs_solve(m, lb, np.maximum(lb, ub), tol)
    return simplex_solve(m, lb, ub, tol)
