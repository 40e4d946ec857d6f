"""Scenario-level solves: one MILP per billing month, bills summed.

Demand charges are monthly, so a horizon spanning several months is cut at
month boundaries; each month restarts the battery from its initial state
of charge. Export prices are built on the full horizon before slicing so
that avoided-cost averaging sees every step.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .formulation import (
    STEP_ROLES,
    BillBreakdown,
    DispatchSolution,
    MilpModel,
    Status,
    build_milp,
    compute_bill,
    extract_dispatch,
)
from .policy import ExportRules, build_export_rules
from .solver import solve_milp
from .types import Scenario, ensure_valid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    gap_tol: float = 1e-6
    node_limit: int = 10_000
    engine: str = "auto"
    strict_bes: bool = False
    block_pv_exports_without_bes_export: bool = False


@dataclass
class MonthResult:
    start: int
    stop: int
    scenario: Scenario
    rules: ExportRules
    model: MilpModel
    dispatch: DispatchSolution
    bill: BillBreakdown | None


@dataclass
class ScenarioResult:
    scenario: Scenario
    rules: ExportRules
    months: list[MonthResult] = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def status(self) -> Status:
        statuses = {m.dispatch.status for m in self.months}
        for worst in (Status.INFEASIBLE, Status.UNBOUNDED, Status.GAP_LIMIT):
            if worst in statuses:
                return worst
        return Status.OPTIMAL

    @property
    def bill(self) -> BillBreakdown | None:
        if any(m.bill is None for m in self.months):
            return None
        total = BillBreakdown(0.0, 0.0, 0.0)
        for m in self.months:
            total = total + m.bill
        return total

    @property
    def objective(self) -> float:
        return float(sum(m.dispatch.objective for m in self.months))

    def series(self, role: str) -> np.ndarray:
        """Full-horizon values of one per-step role."""
        return np.concatenate([m.dispatch.values[role] for m in self.months])

    def zeta(self) -> dict[int, float]:
        out = {}
        for m in self.months:
            out.update({m.start + s: v for s, v in m.dispatch.zeta.items()})
        return out


def solve_month(
    s: Scenario, rules: ExportRules, options: SolveOptions = SolveOptions()
) -> tuple[MilpModel, DispatchSolution]:
    model = build_milp(s, rules, strict_bes=options.strict_bes)
    raw = solve_milp(
        model,
        gap_tol=options.gap_tol,
        node_limit=options.node_limit,
        engine=options.engine,
    )
    return model, extract_dispatch(model, raw)


def solve_scenario(s: Scenario, options: SolveOptions = SolveOptions()) -> ScenarioResult:
    """Validate, split by month, solve each month and re-price its dispatch."""
    ensure_valid(s)
    t0 = time.perf_counter()
    rules = build_export_rules(s, options.block_pv_exports_without_bes_export)
    result = ScenarioResult(s, rules)
    for start, stop in s.calendar.month_blocks():
        sub = s.slice(start, stop)
        sub_rules = rules.slice(start, stop)
        model, dispatch = solve_month(sub, sub_rules, options)
        bill = compute_bill(dispatch, sub, sub_rules) if dispatch.has_values else None
        log.debug(
            "month %d steps [%d, %d): %s objective %.6f, %d nodes",
            int(sub.calendar.month[0]), start, stop, dispatch.status.value,
            dispatch.objective, dispatch.nodes,
        )
        result.months.append(MonthResult(start, stop, sub, sub_rules, model, dispatch, bill))
    result.wall_seconds = time.perf_counter() - t0
    return result


__all__ = [
    "STEP_ROLES",
    "MonthResult",
    "ScenarioResult",
    "SolveOptions",
    "solve_month",
    "solve_scenario",
]
