"""Best-bound branch and bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from ..formulation import MilpModel, SolverResult, Status
from .config import DEFAULT_TOLERANCES, Tolerances
from .lp import LpSolution, solve_lp

log = logging.getLogger(__name__)


@dataclass(order=True)
class BnbNode:
    """Open node; ordering gives best bound first, deeper nodes on ties."""

    bound: float
    neg_depth: int
    seq: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    lp: LpSolution = field(compare=False)
    parent_bound: float = field(compare=False, default=-np.inf)


def branch_select(
    values, ids=None, tol: float = DEFAULT_TOLERANCES.integrality
) -> int:
    """Most fractional binary; ties go to the lowest position.

    Returns the entry of ``ids`` (or the position when ``ids`` is omitted).
    """
    values = np.asarray(values, dtype=float)
    dist = np.abs(values - np.round(values))
    if not np.any(dist > tol):
        raise ValueError("branch_select needs at least one fractional value")
    k = int(np.flatnonzero(dist >= dist.max() - 1e-12)[0])
    return int(ids[k]) if ids is not None else k


def relative_gap(upper: float, lower: float) -> float:
    """Gap normalised by ``max(1, |upper|)`` so zero-cost optima are handled."""
    if not np.isfinite(upper):
        return np.inf
    return max(0.0, upper - lower) / max(1.0, abs(upper))


def solve_milp(
    m: MilpModel,
    gap_tol: float | None = None,
    node_limit: int = 10_000,
    engine: str = "auto",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SolverResult:
    gap_tol = tol.gap if gap_tol is None else gap_tol
    bins = m.binaries
    root = solve_lp(m, engine=engine, tol=tol)
    if root.status is not Status.OPTIMAL:
        return SolverResult(root.status, iterations=root.iterations, nodes=1)
    if bins.size == 0:
        return SolverResult(
            Status.OPTIMAL, root.x, root.objective, root.objective, 1, root.iterations
        )

    seq = itertools.count()
    heap = [BnbNode(root.objective, 0, next(seq), m.lb.copy(), m.ub.copy(), root)]
    incumbent: np.ndarray | None = None
    upper = np.inf
    lower = root.objective
    nodes = 0
    iterations = root.iterations
    status = Status.OPTIMAL

    def prunable(bound: float) -> bool:
        return bound >= upper - gap_tol * max(1.0, abs(upper))

    while heap:
        node = heapq.heappop(heap)
        lower = node.bound
        if relative_gap(upper, lower) <= gap_tol:
            break
        if nodes >= node_limit:
            heapq.heappush(heap, node)
            status = Status.GAP_LIMIT
            break
        nodes += 1
        x = node.lp.x
        xb = x[bins]
        frac = np.abs(xb - np.round(xb))
        if not np.any(frac > tol.integrality):
            candidate, objective = x, node.lp.objective
            if np.any(frac > 0):
                lb, ub = node.lb.copy(), node.ub.copy()
                lb[bins] = ub[bins] = np.round(xb)
                polished = solve_lp(m, lb, ub, engine=engine, tol=tol)
                iterations += polished.iterations
                if polished.status is Status.OPTIMAL:
                    candidate, objective = polished.x, polished.objective
            if objective < upper:
                upper, incumbent = objective, candidate
                log.debug("incumbent %.9g at node %d", upper, nodes)
            continue

        j = branch_select(xb, bins, tol.integrality)
        for value in (0.0, 1.0):
            lb, ub = node.lb.copy(), node.ub.copy()
            lb[j] = ub[j] = value
            child = solve_lp(m, lb, ub, engine=engine, tol=tol)
            iterations += child.iterations
            if child.status is not Status.OPTIMAL:
                continue
            bound = max(child.objective, node.bound)
            if prunable(bound):
                continue
            heapq.heappush(
                heap,
                BnbNode(bound, node.neg_depth - 1, next(seq), lb, ub, child, node.bound),
            )
    else:
        lower = upper

    if incumbent is None:
        if status is Status.GAP_LIMIT:
            return SolverResult(Status.GAP_LIMIT, bound=lower, nodes=nodes,
                                iterations=iterations)
        return SolverResult(Status.INFEASIBLE, nodes=nodes, iterations=iterations)
    if status is Status.GAP_LIMIT:
        lower = min(n.bound for n in heap) if heap else upper
    lower = min(lower, upper)
    return SolverResult(status, incumbent, float(m.c @ incumbent), lower, nodes, iterations)
