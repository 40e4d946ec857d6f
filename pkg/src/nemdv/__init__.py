"""Behind-the-meter DER bill optimisation under net-metering policies."""

from .engine import ScenarioResult, SolveOptions, solve_scenario
from .formulation import (
    BillBreakdown,
    DispatchSolution,
    MilpModel,
    Status,
    audit_feasibility,
    big_m,
    build_milp,
    compute_bill,
    extract_dispatch,
)
from .policy import (
    ExportRules,
    build_export_prices,
    build_export_rules,
    compute_export_window,
    resolve_export_flags,
)
from .sweep import ResultRow, SweepConfig, compute_baseline, run_sweep
from .types import (
    BesScheme,
    BesSpec,
    Calendar,
    DemandPeriod,
    FlexSpec,
    NemPolicy,
    PolicyKind,
    PvSpec,
    Scenario,
    Tariff,
    TimeSeries,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "BesScheme",
    "BesSpec",
    "BillBreakdown",
    "Calendar",
    "DemandPeriod",
    "DispatchSolution",
    "ExportRules",
    "FlexSpec",
    "MilpModel",
    "NemPolicy",
    "PolicyKind",
    "PvSpec",
    "ResultRow",
    "Scenario",
    "ScenarioResult",
    "SolveOptions",
    "Status",
    "SweepConfig",
    "Tariff",
    "TimeSeries",
    "audit_feasibility",
    "big_m",
    "build_export_prices",
    "build_export_rules",
    "build_milp",
    "compute_baseline",
    "compute_bill",
    "compute_export_window",
    "extract_dispatch",
    "resolve_export_flags",
    "run_sweep",
    "solve_scenario",
    "validate_scenario",
]
