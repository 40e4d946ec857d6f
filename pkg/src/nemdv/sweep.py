"""Scenario grids over PV size, battery size/duration/scheme, demand flexibility
and net-metering policy, with bills expressed relative to a no-NEM baseline.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

from .engine import SolveOptions, solve_scenario
from .formulation import BillBreakdown, audit_feasibility
from .types import (
    DEFAULT_NBC,
    BesScheme,
    BesSpec,
    FlexSpec,
    NemPolicy,
    PolicyKind,
    PvSpec,
    Scenario,
    TimeSeries,
    ensure_valid,
)

log = logging.getLogger(__name__)

AXES = (
    "pv_ratio",
    "bes_power_ratio",
    "bes_duration_hours",
    "scheme",
    "flex_fraction",
    "recovery_hours",
    "policy",
)
NULL_ASSET_RTOL = 1e-9


class Baseline(str, Enum):
    SAME_PV_NO_NEM = "same_pv_no_nem"
    PV_ONLY_NO_NEM = "pv_only_no_nem"


class MissingBaselineError(KeyError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    """Axis lists for a scenario grid.

    ``bes_power_ratio`` / ``flex_fraction`` set to ``None`` leave the asset
    out entirely, together with its dependent axes. Ratios are fractions of
    the base scenario's maximum demand.
    """

    base: Scenario
    pv_ratio: tuple = (1.0,)
    bes_power_ratio: tuple | None = None
    bes_duration_hours: tuple = (2.0,)
    scheme: tuple = (BesScheme.GRID_CHARGE_WITH_EXPORT,)
    flex_fraction: tuple | None = None
    recovery_hours: tuple = (6,)
    policy: tuple = (PolicyKind.NEM1, PolicyKind.NEM2, PolicyKind.NEM3, PolicyKind.NO_NEM)
    baseline: Baseline | None = None
    acc: TimeSeries | None = None
    nbc: float = DEFAULT_NBC
    options: SolveOptions = SolveOptions()
    check_null_assets: bool = True

    def __post_init__(self):
        for name in ("pv_ratio", "bes_duration_hours", "scheme", "recovery_hours", "policy"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("bes_power_ratio", "flex_fraction"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "scheme", tuple(BesScheme(x) for x in self.scheme))
        object.__setattr__(self, "policy", tuple(PolicyKind(x) for x in self.policy))
        if self.acc is None and self.base.policy.acc_hourly is not None:
            object.__setattr__(self, "acc", self.base.policy.acc_hourly)
        problems = []
        for name in AXES:
            values = self.axis_values(name)
            if values is not None and len(values) == 0:
                problems.append(f"{name}: empty axis")
        for name in ("pv_ratio", "bes_power_ratio", "bes_duration_hours", "flex_fraction"):
            values = getattr(self, name)
            if values is not None and any(v < 0 for v in values):
                problems.append(f"{name}: negative ratio")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def has_bes(self) -> bool:
        return self.bes_power_ratio is not None

    @property
    def has_flex(self) -> bool:
        return self.flex_fraction is not None

    @property
    def baseline_rule(self) -> Baseline:
        if self.baseline is not None:
            return Baseline(self.baseline)
        if self.has_bes or self.has_flex:
            return Baseline.PV_ONLY_NO_NEM
        return Baseline.SAME_PV_NO_NEM

    def axis_values(self, name: str):
        if name in ("bes_power_ratio", "bes_duration_hours", "scheme") and not self.has_bes:
            return None
        if name in ("flex_fraction", "recovery_hours") and not self.has_flex:
            return None
        return getattr(self, name)

    def grid(self) -> list[dict]:
        """Every grid point, in lexicographic axis order."""
        lists = [self.axis_values(a) or (None,) for a in AXES]
        return [dict(zip(AXES, combo)) for combo in itertools.product(*lists)]


@dataclass
class ResultRow:
    axes: dict
    bill: BillBreakdown | None
    status: str
    wall_seconds: float = 0.0
    objective: float = float("nan")
    audit_violations: int = 0
    relative_bill: float | None = None
    is_baseline: bool = False
    notes: list = field(default_factory=list)

    @property
    def key(self) -> tuple:
        return tuple(self.axes[a] for a in AXES)


def point_scenario(cfg: SweepConfig, axes: dict) -> Scenario:
    base = cfg.base
    peak = base.max_demand
    pv_eff = base.pv.inverter_efficiency if base.pv is not None else PvSpec(0).inverter_efficiency
    pv = PvSpec(axes["pv_ratio"] * peak, pv_eff)
    bes = None
    if axes["bes_power_ratio"] is not None:
        proto = base.bes or BesSpec(0.0, 0.0)
        bes = BesSpec(
            rated_power=axes["bes_power_ratio"] * peak,
            duration=axes["bes_duration_hours"],
            round_trip_efficiency=proto.round_trip_efficiency,
            scheme=axes["scheme"],
        )
    flex = None
    if axes["flex_fraction"] is not None:
        flex = FlexSpec(axes["flex_fraction"], int(axes["recovery_hours"]))
    kind = axes["policy"]
    if kind is PolicyKind.NEM3:
        policy = NemPolicy.nem3(cfg.acc)
    elif kind is PolicyKind.NEM2:
        policy = NemPolicy.nem2(cfg.nbc)
    else:
        policy = NemPolicy(kind)
    return replace(base, pv=pv, bes=bes, flex=flex, policy=policy)


def _null_asset_variant(s: Scenario, axes: dict) -> Scenario | None:
    bes_null = axes["bes_power_ratio"] == 0
    flex_null = axes["flex_fraction"] == 0
    if not (bes_null or flex_null):
        return None
    return replace(
        s,
        bes=None if bes_null else s.bes,
        flex=None if flex_null else s.flex,
    )


def _bills_agree(a: float, b: float) -> bool:
    return abs(a - b) <= NULL_ASSET_RTOL * max(1.0, abs(a), abs(b))


def run_point(cfg: SweepConfig, axes: dict, is_baseline: bool = False) -> ResultRow:
    t0 = time.perf_counter()
    try:
        s = point_scenario(cfg, axes)
        res = solve_scenario(s, cfg.options)
        bill = res.bill
        status = res.status.value
        violations = 0
        notes = []
        for month in res.months:
            if month.dispatch.has_values:
                violations += len(audit_feasibility(month.dispatch, month.model, 1e-6))
        if cfg.check_null_assets and bill is not None:
            variant = _null_asset_variant(s, axes)
            if variant is not None:
                ref = solve_scenario(variant, cfg.options).bill
                if ref is None or not _bills_agree(bill.net_bill, ref.net_bill):
                    status = "NullAssetMismatch"
                    notes.append(f"asset-absent bill {ref.net_bill if ref else None}")
        row = ResultRow(axes, bill, status, objective=res.objective,
                        audit_violations=violations, is_baseline=is_baseline, notes=notes)
    except Exception as exc:  # recorded in-row; a sweep never aborts on one point
        log.warning("sweep point %s failed: %s", axes, exc)
        row = ResultRow(axes, None, f"Error: {exc}", is_baseline=is_baseline)
    row.wall_seconds = time.perf_counter() - t0
    return row


def baseline_axes(cfg: SweepConfig, axes: dict) -> dict:
    out = dict.fromkeys(AXES)
    out["policy"] = PolicyKind.NO_NEM
    if cfg.baseline_rule is Baseline.SAME_PV_NO_NEM:
        out.update({a: axes[a] for a in AXES if a != "policy"})
    else:
        out["pv_ratio"] = 1.0
    return out


def compute_baseline(cfg: SweepConfig, rows: list[ResultRow]) -> dict[int, float | None]:
    """Map each row position to its baseline net bill."""
    by_key = {r.key: r for r in rows}
    out = {}
    for i, r in enumerate(rows):
        want = baseline_axes(cfg, r.axes)
        key = tuple(want[a] for a in AXES)
        if key not in by_key:
            raise MissingBaselineError(f"baseline point missing from rows: {want}")
        base = by_key[key]
        out[i] = base.bill.net_bill if base.bill is not None else None
    return out


def _run(args):
    cfg, axes, is_baseline = args
    return run_point(cfg, axes, is_baseline)


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> list[ResultRow]:
    """Solve every grid point plus any baseline point the grid lacks.

    Rows come back in grid order with extra baseline rows appended, whatever
    ``jobs`` is.
    """
    ensure_valid(cfg.base)
    points = cfg.grid()
    keys = {tuple(p[a] for a in AXES) for p in points}
    extra = []
    for p in points:
        b = baseline_axes(cfg, p)
        k = tuple(b[a] for a in AXES)
        if k not in keys:
            keys.add(k)
            extra.append(b)
    tasks = [(cfg, p, False) for p in points] + [(cfg, b, True) for b in extra]
    if jobs <= 1:
        rows = [_run(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run, tasks))
    baselines = compute_baseline(cfg, rows)
    for i, r in enumerate(rows):
        base = baselines[i]
        if r.bill is not None and base is not None and base != 0:
            r.relative_bill = r.bill.net_bill / base
    return rows


def sweep_config_from_dict(base: Scenario, d: dict, options: SolveOptions = SolveOptions()) -> SweepConfig:
    kwargs = {}
    for name in AXES:
        if name in d:
            kwargs[name] = tuple(d[name]) if d[name] is not None else None
    if "baseline" in d:
        kwargs["baseline"] = Baseline(d["baseline"])
    if "nbc" in d:
        kwargs["nbc"] = float(d["nbc"])
    return SweepConfig(base=base, options=options, **kwargs)
