"""Bill-minimisation MILP: model construction, dispatch extraction, re-pricing
and an independent feasibility audit.

Variables are laid out role-major: the nine per-step roles in ``STEP_ROLES``
occupy ``role_index * T + t``; they are followed by one peak-demand variable
per demand period, one export indicator per export-window step and, in
strict mode, one charge/discharge selector per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .policy import ExportRules
from .types import BesScheme, Scenario

STEP_ROLES = (
    "p_pv_btm",
    "p_pv_exp",
    "p_cha",
    "p_dis_btm",
    "p_dis_exp",
    "d_dev_up",
    "d_dev_dn",
    "soc",
    "d_net",
)


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    GAP_LIMIT = "GapLimit"


@dataclass(frozen=True)
class MilpModel:
    """Solver-facing model ``min c.x  s.t.  rows(A x ? rhs), lb <= x <= ub``.

    ``sense`` holds one of ``"<"``, ``"="``, ``">"`` per row.
    """

    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_binary: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    row_names: tuple[str, ...]
    var_names: tuple[str, ...]
    var_index: dict
    n_steps: int = 0
    s_set: tuple[int, ...] = ()
    period_names: tuple[str, ...] = ()

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def binaries(self) -> np.ndarray:
        return np.flatnonzero(self.is_binary)

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "MilpModel":
        return MilpModel(
            self.c, lb, ub, self.is_binary, self.A, self.sense, self.rhs,
            self.row_names, self.var_names, self.var_index,
            self.n_steps, self.s_set, self.period_names,
        )


class _Builder:
    def __init__(self):
        self.c, self.lb, self.ub, self.binary, self.names = [], [], [], [], []
        self.index = {}
        self.rows, self.cols, self.vals = [], [], []
        self.sense, self.rhs, self.row_names = [], [], []

    def var(self, key, name, lb, ub, cost=0.0, binary=False) -> int:
        k = len(self.c)
        self.index[key] = k
        self.c.append(cost)
        self.lb.append(lb)
        self.ub.append(ub)
        self.binary.append(binary)
        self.names.append(name)
        return k

    def row(self, name, terms, sense, rhs):
        r = len(self.rhs)
        for col, coef in terms:
            if coef != 0.0:
                self.rows.append(r)
                self.cols.append(col)
                self.vals.append(coef)
        self.sense.append(sense)
        self.rhs.append(rhs)
        self.row_names.append(name)

    def build(self, **meta) -> MilpModel:
        A = sp.csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(len(self.rhs), len(self.c))
        )
        A.sum_duplicates()
        return MilpModel(
            c=np.array(self.c, dtype=float),
            lb=np.array(self.lb, dtype=float),
            ub=np.array(self.ub, dtype=float),
            is_binary=np.array(self.binary, dtype=bool),
            A=A,
            sense=np.array(self.sense),
            rhs=np.array(self.rhs, dtype=float),
            row_names=tuple(self.row_names),
            var_names=tuple(self.names),
            var_index=self.index,
            **meta,
        )


def _flex_bound(s: Scenario) -> np.ndarray:
    alpha = s.flex.flex_fraction if s.flex is not None else 0.0
    return alpha * s.demand.values


def big_m(t: int, s: Scenario) -> float:
    """Upper bound on net demand at step ``t``.

    Net demand can exceed the base demand only through battery charging
    (at most the power rating) and upward flexible deviation.
    """
    p_bes = s.bes.rated_power if s.bes is not None else 0.0
    return float(s.demand.values[t] + p_bes + _flex_bound(s)[t])


def _supply_caps(s: Scenario) -> tuple[np.ndarray, float, np.ndarray]:
    pv = np.zeros(s.n_steps)
    if s.pv is not None:
        pv = s.pv.inverter_efficiency * s.pv.rated_power * s.pv_cf.values
    p_bes = s.bes.rated_power if s.bes is not None else 0.0
    return pv, p_bes, _flex_bound(s)


def zero_net_unreachable(s: Scenario, t: int, tol: float = 1e-9) -> bool:
    """True when PV, full discharge and downward flex cannot cover d(t)."""
    pv, p_bes, flex = _supply_caps(s)
    return bool(s.demand.values[t] > pv[t] + p_bes + flex[t] + tol)


def export_link_cap(s: Scenario, rules: ExportRules) -> np.ndarray:
    """Per-step export capacity while net demand is held at zero.

    Never larger than ``P_pv + P_bes``. Whatever part of the PV and battery
    output has to serve the base demand (less the downward flex) cannot be
    exported, and exports the rules forbid count for nothing. Integer
    solutions are unaffected; relaxations get much tighter.
    """
    pv, p_bes, flex = _supply_caps(s)
    p_pv = s.pv.rated_power if s.pv is not None else 0.0
    allowed = pv * rules.pv_export_allowed + p_bes * rules.bes_export_allowed
    spare = pv + p_bes + flex - s.demand.values
    return np.clip(np.minimum(np.minimum(allowed, spare), p_pv + p_bes), 0.0, None)


def build_milp(s: Scenario, rules: ExportRules, strict_bes: bool = False) -> MilpModel:
    """Assemble the bill-minimisation MILP for one horizon.

    Absent assets keep their variables, fixed to zero, so that the variable
    layout is the same for every asset mix. With ``strict_bes`` a binary
    selector per step forbids simultaneous charging and discharging.
    """
    T = s.n_steps
    d = s.demand.values
    en = s.tariff.energy_price.values
    exp = rules.export_price.values

    pv_avail = np.zeros(T)
    p_pv = 0.0
    if s.pv is not None:
        p_pv = s.pv.rated_power
        pv_avail = s.pv.inverter_efficiency * p_pv * s.pv_cf.values
    bes = s.bes
    p_bes = bes.rated_power if bes is not None else 0.0
    soc_lo = bes.soc_min if bes is not None else 0.0
    soc_hi = bes.soc_max if bes is not None else 0.0
    flex_hi = _flex_bound(s)
    M = d + p_bes + flex_hi

    b = _Builder()
    ub_by_role = {
        "p_pv_btm": pv_avail,
        "p_pv_exp": pv_avail if rules.pv_export_allowed else np.zeros(T),
        "p_cha": np.full(T, p_bes),
        "p_dis_btm": np.full(T, p_bes),
        "p_dis_exp": np.full(T, p_bes if rules.bes_export_allowed else 0.0),
        "d_dev_up": flex_hi,
        "d_dev_dn": flex_hi,
        "soc": np.full(T, soc_hi),
        "d_net": M,
    }
    cost_by_role = {"p_pv_exp": -exp, "p_dis_exp": -exp, "d_net": en}
    for role in STEP_ROLES:
        lo = soc_lo if role == "soc" else 0.0
        hi = ub_by_role[role]
        cost = cost_by_role.get(role)
        for t in range(T):
            b.var((role, t), f"{role}[{t}]", lo, hi[t], 0.0 if cost is None else cost[t])
    v = b.index

    periods = s.tariff.demand_periods
    m_cap = float(M.max()) if T else 0.0
    for n, p in enumerate(periods):
        b.var(("d_max", n), f"d_max[{p.name}]", 0.0, m_cap, p.price)
    for sx in rules.s_set:
        b.var(("zeta", sx), f"zeta[{sx}]", 0.0, 1.0, 0.0, binary=True)
    strict = strict_bes and bes is not None
    if strict:
        for t in range(T):
            b.var(("u_cha", t), f"u_cha[{t}]", 0.0, 1.0, 0.0, binary=True)

    for t in range(T):
        b.row(
            f"net_demand[{t}]",
            [
                (v["d_net", t], 1.0),
                (v["p_pv_btm", t], 1.0),
                (v["p_cha", t], -1.0),
                (v["p_dis_btm", t], 1.0),
                (v["d_dev_up", t], -1.0),
                (v["d_dev_dn", t], 1.0),
            ],
            "=",
            d[t],
        )

    link_cap = export_link_cap(s, rules)
    for sx in rules.s_set:
        z = v["zeta", sx]
        b.row(f"export_gate[{sx}]", [(v["d_net", sx], 1.0), (z, M[sx])], "<", M[sx])
        b.row(
            f"export_link[{sx}]",
            [(v["p_pv_exp", sx], 1.0), (v["p_dis_exp", sx], 1.0), (z, -link_cap[sx])],
            "<",
            0.0,
        )
        # zero net demand means behind-the-meter supply covers the base demand
        b.row(
            f"export_cover[{sx}]",
            [(v["p_pv_btm", sx], 1.0), (v["p_dis_btm", sx], 1.0), (v["d_dev_dn", sx], 1.0),
             (z, -d[sx])],
            ">",
            0.0,
        )
        if zero_net_unreachable(s, sx):
            b.ub[z] = 0.0

    for n, p in enumerate(periods):
        for t in np.flatnonzero(p.mask):
            b.row(
                f"peak_demand[{t},{p.name}]",
                [(v["d_net", t], 1.0), (v["d_max", n], -1.0)],
                "<",
                0.0,
            )

    if s.pv is not None:
        for t in range(T):
            b.row(
                f"pv_limit[{t}]",
                [(v["p_pv_btm", t], 1.0), (v["p_pv_exp", t], 1.0)],
                "<",
                pv_avail[t],
            )

    if bes is not None:
        eta = bes.round_trip_efficiency
        for t in range(T):
            b.row(
                f"discharge_limit[{t}]",
                [(v["p_dis_btm", t], 1.0), (v["p_dis_exp", t], 1.0)],
                "<",
                p_bes,
            )
        for t in range(T):
            terms = [
                (v["soc", t], 1.0),
                (v["p_cha", t], -eta),
                (v["p_dis_btm", t], 1.0),
                (v["p_dis_exp", t], 1.0),
            ]
            if t > 0:
                terms.append((v["soc", t - 1], -1.0))
                b.row(f"soc_balance[{t}]", terms, "=", 0.0)
            else:
                b.row(f"soc_balance[{t}]", terms, "=", bes.soc_init)
        b.row("terminal_soc", [(v["soc", T - 1], 1.0)], ">", bes.soc_init)
        if bes.scheme is BesScheme.PV_CHARGE_WITH_EXPORT:
            for t in range(T):
                b.row(
                    f"pv_only_charging[{t}]",
                    [(v["p_cha", t], 1.0), (v["p_pv_btm", t], -1.0)],
                    "<",
                    0.0,
                )
        if strict:
            for t in range(T):
                u = v["u_cha", t]
                b.row(f"charge_select[{t}]", [(v["p_cha", t], 1.0), (u, -p_bes)], "<", 0.0)
                b.row(
                    f"discharge_select[{t}]",
                    [(v["p_dis_btm", t], 1.0), (v["p_dis_exp", t], 1.0), (u, p_bes)],
                    "<",
                    p_bes,
                )

    if s.flex is not None:
        up = [v["d_dev_up", t] for t in range(T)]
        dn = [v["d_dev_dn", t] for t in range(T)]
        b.row(
            "flex_balance",
            [(i, 1.0) for i in up] + [(i, -1.0) for i in dn],
            "=",
            0.0,
        )
        width = int(s.flex.recovery_period)
        for k in range(T - width + 1):
            window = range(k, k + width)
            b.row(
                f"flex_window[{k}]",
                [(up[t], 1.0) for t in window] + [(dn[t], -1.0) for t in window],
                ">",
                0.0,
            )

    return b.build(
        n_steps=T,
        s_set=tuple(rules.s_set),
        period_names=tuple(p.name for p in periods),
    )


@dataclass
class SolverResult:
    """Raw solver output: one value per model variable."""

    status: Status
    x: np.ndarray | None = None
    objective: float = float("nan")
    bound: float = float("nan")
    nodes: int = 0
    iterations: int = 0


@dataclass
class DispatchSolution:
    status: Status
    values: dict = field(default_factory=dict)
    d_max: np.ndarray | None = None
    zeta: dict = field(default_factory=dict)
    u_cha: np.ndarray | None = None
    objective: float = float("nan")
    bound: float = float("nan")
    nodes: int = 0
    iterations: int = 0

    @property
    def has_values(self) -> bool:
        return bool(self.values)


def recompute_net_demand(d: DispatchSolution, demand: np.ndarray) -> np.ndarray:
    """Net demand rebuilt from its components, ignoring the solver's copy."""
    v = d.values
    return (
        demand
        - v["p_pv_btm"]
        + v["p_cha"]
        - v["p_dis_btm"]
        + v["d_dev_up"]
        - v["d_dev_dn"]
    )


def extract_dispatch(m: MilpModel, raw: SolverResult) -> DispatchSolution:
    if raw.status not in (Status.OPTIMAL, Status.GAP_LIMIT) or raw.x is None:
        return DispatchSolution(status=raw.status, bound=raw.bound, nodes=raw.nodes,
                                iterations=raw.iterations)
    x = np.asarray(raw.x, dtype=float)
    if len(x) != m.n_vars:
        raise ValueError(
            f"assignment covers {len(x)} variables, model has {m.n_vars}"
        )
    T = m.n_steps
    values = {role: x[r * T:(r + 1) * T].copy() for r, role in enumerate(STEP_ROLES)}
    d_max = np.array([x[m.var_index["d_max", n]] for n in range(len(m.period_names))])
    zeta = {sx: float(x[m.var_index["zeta", sx]]) for sx in m.s_set}
    u_cha = None
    if ("u_cha", 0) in m.var_index:
        u_cha = np.array([x[m.var_index["u_cha", t]] for t in range(T)])
    return DispatchSolution(
        status=raw.status,
        values=values,
        d_max=d_max,
        zeta=zeta,
        u_cha=u_cha,
        objective=float(raw.objective),
        bound=raw.bound,
        nodes=raw.nodes,
        iterations=raw.iterations,
    )


def dispatch_vector(d: DispatchSolution, m: MilpModel) -> np.ndarray:
    """Inverse of :func:`extract_dispatch`."""
    x = np.zeros(m.n_vars)
    T = m.n_steps
    for r, role in enumerate(STEP_ROLES):
        x[r * T:(r + 1) * T] = d.values[role]
    for n in range(len(m.period_names)):
        x[m.var_index["d_max", n]] = d.d_max[n]
    for sx in m.s_set:
        x[m.var_index["zeta", sx]] = d.zeta[sx]
    if d.u_cha is not None and ("u_cha", 0) in m.var_index:
        for t in range(T):
            x[m.var_index["u_cha", t]] = d.u_cha[t]
    return x


@dataclass(frozen=True)
class BillBreakdown:
    demand_charge_total: float
    energy_charge_total: float
    export_revenue: float

    @property
    def net_bill(self) -> float:
        return self.demand_charge_total + self.energy_charge_total - self.export_revenue

    def __add__(self, other: "BillBreakdown") -> "BillBreakdown":
        return BillBreakdown(
            self.demand_charge_total + other.demand_charge_total,
            self.energy_charge_total + other.energy_charge_total,
            self.export_revenue + other.export_revenue,
        )


def compute_bill(d: DispatchSolution, s: Scenario, rules: ExportRules) -> BillBreakdown:
    """Price a dispatch directly from its physical flows.

    Peak demand per period is taken as the largest recomputed net demand
    inside the period mask, so the result does not depend on the solver's
    objective or on its peak-demand variables.
    """
    net = recompute_net_demand(d, s.demand.values)
    demand_charge = 0.0
    for p in s.tariff.demand_periods:
        if p.mask.any():
            demand_charge += p.price * max(0.0, float(net[p.mask].max()))
    energy = float(np.dot(s.tariff.energy_price.values, net))
    exports = d.values["p_pv_exp"] + d.values["p_dis_exp"]
    revenue = float(np.dot(rules.export_price.values, exports))
    return BillBreakdown(demand_charge, energy, revenue)


@dataclass(frozen=True)
class Violation:
    row: str
    residual: float

    def __str__(self) -> str:
        return f"{self.row}: residual {self.residual:.3g}"


def audit_feasibility(
    d: DispatchSolution, m: MilpModel, tol: float = 1e-6
) -> list[Violation]:
    """Evaluate every row, bound and integrality requirement of ``m`` at ``d``."""
    x = dispatch_vector(d, m)
    out: list[Violation] = []
    below = m.lb - x
    above = x - m.ub
    for j in np.flatnonzero(below > tol):
        out.append(Violation(f"bound:{m.var_names[j]}>=lb", float(below[j])))
    for j in np.flatnonzero(above > tol):
        out.append(Violation(f"bound:{m.var_names[j]}<=ub", float(above[j])))
    for j in m.binaries:
        frac = abs(x[j] - round(x[j]))
        if frac > tol:
            out.append(Violation(f"integrality:{m.var_names[j]}", float(frac)))
    act = m.A @ x
    diff = act - m.rhs
    resid = np.where(
        m.sense == "<", np.maximum(diff, 0.0),
        np.where(m.sense == ">", np.maximum(-diff, 0.0), np.abs(diff)),
    )
    for i in np.flatnonzero(resid > tol):
        out.append(Violation(m.row_names[i], float(resid[i])))
    return out


def simultaneous_bes_steps(d: DispatchSolution, tol: float = 1e-6) -> list[int]:
    """Steps where the battery both charges and discharges (reported, not an error)."""
    v = d.values
    both = (v["p_cha"] > tol) & (v["p_dis_btm"] + v["p_dis_exp"] > tol)
    return [int(t) for t in np.flatnonzero(both)]


def format_lp(m: MilpModel) -> str:
    """Plain-text LP-style listing, one constraint per line."""

    def expr(cols, vals):
        parts = []
        for j, a in zip(cols, vals):
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {abs(a):.12g} {m.var_names[j]}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text

    nz = np.flatnonzero(m.c)
    lines = ["minimize", " obj: " + (expr(nz, m.c[nz]) or "0"), "subject to"]
    op = {"<": "<=", "=": "=", ">": ">="}
    A = m.A.tocsr()
    for i, name in enumerate(m.row_names):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        body = expr(A.indices[lo:hi], A.data[lo:hi]) or "0"
        lines.append(f" {name}: {body} {op[m.sense[i]]} {m.rhs[i]:.12g}")
    lines.append("bounds")
    for j, name in enumerate(m.var_names):
        lines.append(f" {m.lb[j]:.12g} <= {name} <= {m.ub[j]:.12g}")
    if m.binaries.size:
        lines.append("binary")
        lines.extend(f" {m.var_names[j]}" for j in m.binaries)
    lines.append("end")
    return "\n".join(lines) + "\n"
