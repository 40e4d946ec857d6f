import datetime as dt
import itertools

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from nemdv.formulation import Status, build_milp, compute_bill, extract_dispatch
from nemdv.policy import ExportRules, build_export_rules
from nemdv.solver import BnbNode, branch_select, solve_lp, solve_milp
from nemdv.synthetic import fixture_scenario
from nemdv.types import PvSpec, TimeSeries

from .conftest import highs_reference, toy_scenario


def test_branch_select_most_fractional():
    assert branch_select([0.5, 0.9]) == 0


def test_branch_select_tie_goes_to_lowest():
    assert branch_select([0.5, 0.5]) == 0
    assert branch_select([0.3, 0.7], ids=[11, 4]) == 11


def test_branch_select_rejects_integral_input():
    with pytest.raises(ValueError):
        branch_select([1.0 - 1e-9])


def export_toy():
    s = toy_scenario(
        demand=[1.0, 1.0],
        energy_price=[0.3, 0.3],
        pv_cf=[1.0, 0.0],
        pv=PvSpec(2.0, 1.0),
    )
    rules = ExportRules(TimeSeries([0.5, 0.4]), True, False, (0, 1))
    return s, rules


def enumerate_binaries(m):
    """Best objective over every 0/1 assignment, each completed by a HiGHS LP."""
    best = np.inf
    bins = m.binaries
    for combo in itertools.product((0.0, 1.0), repeat=len(bins)):
        lb, ub = m.lb.copy(), m.ub.copy()
        lb[bins] = ub[bins] = combo
        res = highs_reference(m, lb, ub)
        if res.status == 0:
            best = min(best, res.fun)
    return best


def test_export_toy_matches_enumeration():
    s, rules = export_toy()
    m = build_milp(s, rules)
    assert m.binaries.size == 2
    oracle = enumerate_binaries(m)
    assert oracle == pytest.approx(-0.2, abs=1e-9)
    raw = solve_milp(m, engine="simplex")
    assert raw.status is Status.OPTIMAL
    assert raw.objective == pytest.approx(oracle, abs=1e-7)
    d = extract_dispatch(m, raw)
    assert d.zeta[0] == pytest.approx(1.0)
    assert d.values["p_pv_exp"][0] == pytest.approx(1.0)
    assert d.values["d_net"][0] == pytest.approx(0.0, abs=1e-9)
    assert compute_bill(d, s, rules).net_bill == pytest.approx(-0.2, abs=1e-9)


def test_no_binaries_is_one_lp_call():
    s = toy_scenario([1.0, 2.0, 1.0], [0.1, 0.3, 0.2], pv_cf=[0.2, 0.8, 0.1], pv=PvSpec(2.0))
    m = build_milp(s, build_export_rules(s))
    assert m.binaries.size == 0
    lp = solve_lp(m, engine="simplex")
    raw = solve_milp(m, engine="simplex")
    assert raw.nodes == 1
    assert np.array_equal(raw.x, lp.x)
    assert raw.objective == lp.objective


def test_incumbent_not_below_bound():
    s, rules = export_toy()
    raw = solve_milp(build_milp(s, rules), engine="simplex")
    assert raw.objective >= raw.bound - 1e-12
    assert (raw.objective - raw.bound) / max(1.0, abs(raw.objective)) <= 1e-6


@pytest.fixture(scope="module")
def august_week():
    s = fixture_scenario("mep", policy="nem3", bes_ratio=0.5, flex_fraction=0.3,
                         days=7, start=dt.date(2019, 8, 1))
    return build_milp(s, build_export_rules(s))


def test_august_week_root_is_fractional(august_week):
    m = august_week
    xb = solve_lp(m).x[m.binaries]
    assert np.any(np.abs(xb - np.round(xb)) > 1e-6)


def test_node_limit_reports_gap_limit(august_week):
    m = august_week
    raw = solve_milp(m, node_limit=1)
    assert raw.status is Status.GAP_LIMIT
    assert raw.bound <= raw.objective if raw.x is not None else np.isfinite(raw.bound)
    assert extract_dispatch(m, raw).status is Status.GAP_LIMIT


def test_matches_highs_mip(august_week):
    m = august_week
    lo = np.where(m.sense == "<", -np.inf, m.rhs)
    hi = np.where(m.sense == ">", np.inf, m.rhs)
    ref = milp(m.c, constraints=LinearConstraint(m.A, lo, hi), bounds=Bounds(m.lb, m.ub),
               integrality=m.is_binary.astype(int), options={"mip_rel_gap": 1e-9})
    raw = solve_milp(m)
    assert raw.status is Status.OPTIMAL
    assert raw.objective == pytest.approx(ref.fun, rel=1e-6)


def test_node_ordering_best_bound_then_depth():
    a = BnbNode(1.0, -1, 5, None, None, None)
    b = BnbNode(1.0, -3, 9, None, None, None)
    c = BnbNode(0.5, 0, 10, None, None, None)
    assert sorted([a, b, c]) == [c, b, a]


def test_infeasible_root():
    s, rules = export_toy()
    m = build_milp(s, rules)
    lb = m.lb.copy()
    lb[m.var_index["d_net", 1]] = 5.0  # beyond its big-M upper bound
    m2 = m.with_bounds(lb, m.ub)
    assert solve_milp(m2, engine="simplex").status is Status.INFEASIBLE
