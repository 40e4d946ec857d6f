import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.optimize import Bounds, LinearConstraint, milp

from nemdv.formulation import (
    STEP_ROLES,
    MilpModel,
    DispatchSolution,
    SolverResult,
    Status,
    audit_feasibility,
    big_m,
    build_milp,
    compute_bill,
    dispatch_vector,
    export_link_cap,
    extract_dispatch,
    format_lp,
    simultaneous_bes_steps,
    zero_net_unreachable,
)
from nemdv.policy import ExportRules, build_export_rules
from nemdv.solver import solve_lp, solve_milp
from nemdv.types import BesScheme, BesSpec, FlexSpec, NemPolicy, PvSpec, TimeSeries

from .conftest import arbitrage_battery, toy_scenario

T24 = 24
PEAK = np.zeros(T24, bool)
PEAK[16:21] = True
PERIODS = (("all", 10.0, np.ones(T24, bool)), ("peak", 15.0, PEAK), ("part", 4.0, ~PEAK))


def full_day(delta=4, scheme=BesScheme.GRID_CHARGE_WITH_EXPORT):
    hours = np.arange(T24)
    demand = 80 + 40 * np.sin((hours - 6) / 24 * 2 * np.pi)
    cf = np.clip(np.sin((hours - 6) / 12 * np.pi), 0, 1)
    return toy_scenario(
        demand=demand,
        energy_price=np.where(PEAK, 0.30, 0.12),
        pv_cf=cf,
        pv=PvSpec(100.0),
        bes=BesSpec(50.0, 2.0, scheme=scheme),
        flex=FlexSpec(0.2, delta),
        policy=NemPolicy.nem3(TimeSeries(np.zeros(T24))),
        demand_periods=PERIODS,
    )


def five_step_rules(s):
    exp = s.tariff.energy_price.values.copy()
    window = (17, 18, 19, 20, 21)
    exp[list(window)] += 1.0
    return ExportRules(TimeSeries(exp), True, True, window)


@pytest.mark.parametrize("delta", [1, 4, 24])
def test_variable_and_window_counts(delta):
    s = full_day(delta)
    m = build_milp(s, five_step_rules(s))
    assert m.n_vars == 9 * 24 + 3 + 5 == 224
    windows = [r for r in m.row_names if r.startswith("flex_window")]
    assert len(windows) == 24 - delta + 1
    assert m.binaries.size == 5


def test_row_families_present():
    s = full_day(scheme=BesScheme.PV_CHARGE_WITH_EXPORT)
    m = build_milp(s, five_step_rules(s))
    families = {r.split("[")[0] for r in m.row_names}
    assert families == {
        "net_demand", "export_gate", "export_link", "export_cover", "peak_demand", "pv_limit",
        "discharge_limit", "soc_balance", "terminal_soc", "pv_only_charging",
        "flex_balance", "flex_window",
    }
    peak_rows = [r for r in m.row_names if r.startswith("peak_demand")]
    assert len(peak_rows) == 24 + 5 + 19


def test_pv_only_rows_need_that_scheme():
    s = full_day()
    m = build_milp(s, five_step_rules(s))
    assert not any(r.startswith("pv_only_charging") for r in m.row_names)


def test_strict_mode_adds_selectors():
    s = full_day()
    m = build_milp(s, five_step_rules(s), strict_bes=True)
    assert m.binaries.size == 5 + 24
    assert sum(r.startswith("charge_select") for r in m.row_names) == 24


def test_big_m_examples():
    # 100 kW base + 50 kW charging + 10 kW upward flex
    s = toy_scenario([100.0], [0.1], bes=BesSpec(50.0, 1.0), flex=FlexSpec(0.1, 1))
    assert big_m(0, s) == pytest.approx(160.0)
    assert big_m(0, toy_scenario([358.0], [0.1])) == 358.0
    assert big_m(0, toy_scenario([0.0], [0.1], bes=BesSpec(0.0, 1.0), flex=FlexSpec(0.0, 1))) == 0.0


def test_plain_lp_when_no_storage_or_flex():
    s = toy_scenario([5.0, 6.0], [0.1, 0.2], pv_cf=[0.5, 0.5], pv=PvSpec(4.0))
    m = build_milp(s, build_export_rules(s))
    assert m.binaries.size == 0
    for role in ("p_pv_exp", "p_dis_exp", "p_cha", "soc", "d_dev_up"):
        for t in range(2):
            assert m.ub[m.var_index[role, t]] == 0.0


def test_nem2_has_no_binaries():
    s = full_day()
    s = toy_scenario(
        s.demand.values, s.tariff.energy_price.values, s.pv_cf.values,
        s.pv, s.bes, s.flex, NemPolicy.nem2(),
    )
    assert build_milp(s, build_export_rules(s)).binaries.size == 0


def toy_solution():
    s = full_day()
    rules = five_step_rules(s)
    m = build_milp(s, rules)
    raw = solve_milp(m, engine="highs")
    return s, rules, m, raw


@pytest.fixture(scope="module")
def solved():
    return toy_solution()


def test_round_trip_and_objective(solved):
    s, rules, m, raw = solved
    d = extract_dispatch(m, raw)
    x = dispatch_vector(d, m)
    np.testing.assert_array_equal(x, raw.x)
    assert d.objective == pytest.approx(float(m.c @ raw.x), abs=1e-9)
    assert set(d.values) == set(STEP_ROLES)


def test_optimal_dispatch_passes_audit(solved):
    s, rules, m, raw = solved
    d = extract_dispatch(m, raw)
    assert raw.status is Status.OPTIMAL
    assert audit_feasibility(d, m) == []
    bill = compute_bill(d, s, rules).net_bill
    assert abs(raw.objective - bill) <= 1e-9 * (1 + abs(bill))


def test_extract_rejects_short_assignment(solved):
    s, rules, m, raw = solved
    with pytest.raises(ValueError):
        extract_dispatch(m, SolverResult(Status.OPTIMAL, raw.x[:-1]))


def test_extract_infeasible_has_no_values(solved):
    m = solved[2]
    d = extract_dispatch(m, SolverResult(Status.INFEASIBLE))
    assert d.status is Status.INFEASIBLE
    assert not d.has_values


def test_audit_flags_soc_below_floor(solved):
    s, rules, m, raw = solved
    d = extract_dispatch(m, raw)
    d.values["soc"][5] = -3.0
    rows = [v.row for v in audit_feasibility(d, m)]
    assert "bound:soc[5]>=lb" in rows
    assert any(r.startswith("soc_balance") for r in rows)


def test_audit_flags_export_with_import(solved):
    s, rules, m, raw = solved
    d = extract_dispatch(m, raw)
    t = 18
    d.values["d_net"][t] = 5.0
    d.values["p_pv_exp"][t] = 1.0
    d.zeta[t] = 1.0
    rows = {v.row for v in audit_feasibility(d, m)}
    assert f"export_gate[{t}]" in rows


def _one_step(net, price, periods=()):
    values = {r: np.zeros(1) for r in STEP_ROLES}
    values["d_net"][:] = net
    s = toy_scenario([net], [price], demand_periods=periods)
    return DispatchSolution(Status.OPTIMAL, values, np.zeros(len(periods))), s


def test_bill_examples():
    d, s = _one_step(0.0, 0.2)
    assert compute_bill(d, s, build_export_rules(s)).net_bill == 0.0
    d, s = _one_step(10.0, 0.2)
    assert compute_bill(d, s, build_export_rules(s)).net_bill == pytest.approx(2.0)
    d, s = _one_step(5.0, 0.0, (("p", 20.0, np.ones(1, bool)),))
    bill = compute_bill(d, s, build_export_rules(s))
    assert bill.demand_charge_total == pytest.approx(100.0)
    assert bill.net_bill == bill.demand_charge_total + bill.energy_charge_total - bill.export_revenue


def test_simultaneous_steps_reported():
    values = {r: np.zeros(3) for r in STEP_ROLES}
    values["p_cha"][1] = 1.0
    values["p_dis_btm"][1] = 0.5
    assert simultaneous_bes_steps(DispatchSolution(Status.OPTIMAL, values)) == [1]


def test_format_lp_lists_everything():
    s = toy_scenario([0.0, 0.0, 1.0], [0.1, 0.1, 0.5], bes=arbitrage_battery())
    m = build_milp(s, build_export_rules(s))
    text = format_lp(m)
    assert text.startswith("minimize\n")
    assert text.endswith("end\n")
    assert " terminal_soc: 1 soc[2] >= 0\n" in text
    assert text.count("<= p_cha[") == 3
    sol = solve_lp(m)
    assert sol.status is Status.OPTIMAL


def test_zero_net_reachability():
    s = toy_scenario([100.0, 100.0], [0.1, 0.1], pv_cf=[0.5, 0.0], pv=PvSpec(100.0, 1.0),
                     bes=BesSpec(30.0, 1.0), flex=FlexSpec(0.2, 1))
    # 50 + 30 + 20 covers 100; 0 + 30 + 20 does not
    assert not zero_net_unreachable(s, 0)
    assert zero_net_unreachable(s, 1)


def test_link_cap_examples():
    s = toy_scenario([100.0, 10.0], [0.1, 0.1], pv_cf=[0.5, 1.0], pv=PvSpec(100.0, 1.0),
                     bes=BesSpec(30.0, 1.0), flex=FlexSpec(0.2, 1))
    both = ExportRules(TimeSeries([1.0, 1.0]), True, True, (0, 1))
    pv_only = ExportRules(TimeSeries([1.0, 1.0]), True, False, (0, 1))
    np.testing.assert_allclose(export_link_cap(s, both), [0.0, 122.0])
    np.testing.assert_allclose(export_link_cap(s, pv_only), [0.0, 100.0])


def literal_model(m, s):
    """The indicator rows exactly as first written: a flat P_pv + P_bes link
    capacity, no cover rows and no fixed indicators."""
    cap = (s.pv.rated_power if s.pv else 0.0) + (s.bes.rated_power if s.bes else 0.0)
    keep = np.array([not r.startswith("export_cover") for r in m.row_names])
    A = m.A.tolil()
    for i, name in enumerate(m.row_names):
        if name.startswith("export_link"):
            sx = int(name[len("export_link["):-1])
            A[i, m.var_index["zeta", sx]] = -cap
    A = A.tocsr()[keep]
    ub = m.ub.copy()
    ub[m.binaries] = 1.0
    return MilpModel(m.c, m.lb, ub, m.is_binary, A, m.sense[keep], m.rhs[keep],
                     tuple(np.array(m.row_names)[keep]), m.var_names, m.var_index,
                     m.n_steps, m.s_set, m.period_names)


def highs_mip(m):
    lo = np.where(m.sense == "<", -np.inf, m.rhs)
    hi = np.where(m.sense == ">", np.inf, m.rhs)
    return milp(m.c, constraints=LinearConstraint(m.A, lo, hi), bounds=Bounds(m.lb, m.ub),
                integrality=m.is_binary.astype(int), options={"mip_rel_gap": 1e-12})


@st.composite
def export_toys(draw):
    n = draw(st.integers(2, 6))
    unit = st.floats(0.0, 1.0)
    demand = draw(st.lists(st.floats(0.0, 4.0), min_size=n, max_size=n))
    price = draw(st.lists(st.floats(0.05, 0.3), min_size=n, max_size=n))
    premium = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    s = toy_scenario(
        demand, price, pv_cf=draw(st.lists(unit, min_size=n, max_size=n)),
        pv=PvSpec(draw(st.floats(0.0, 5.0)), 1.0),
        bes=BesSpec(draw(st.floats(0.0, 3.0)), 2.0, 0.9, draw(st.sampled_from(list(BesScheme)))),
        flex=FlexSpec(draw(unit), draw(st.integers(1, n))),
        demand_periods=(("p", draw(st.floats(0.0, 5.0)), np.arange(n) >= n // 2),),
    )
    window = tuple(t for t in range(n) if premium[t] > 0.3)
    exp = np.array(price) + np.where(np.array(premium) > 0.3, premium, 0.0)
    return s, ExportRules(TimeSeries(exp), True, s.bes.scheme is not BesScheme.GRID_CHARGE_NO_EXPORT,
                          window)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(export_toys())
def test_tightening_keeps_the_optimum(case):
    s, rules = case
    m = build_milp(s, rules)
    ref = highs_mip(literal_model(m, s))
    assert ref.status == 0
    raw = solve_milp(m, gap_tol=1e-12)
    assert raw.status is Status.OPTIMAL
    assert raw.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
    assert audit_feasibility(extract_dispatch(m, raw), literal_model(m, s)) == []
