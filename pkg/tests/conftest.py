import numpy as np
import pytest
from scipy.optimize import linprog

from nemdv.synthetic import fixture_scenario
from nemdv.types import (
    BesScheme,
    BesSpec,
    DemandPeriod,
    NemPolicy,
    PvSpec,
    Scenario,
    Tariff,
    TimeSeries,
)


def toy_scenario(
    demand,
    energy_price,
    pv_cf=None,
    pv=None,
    bes=None,
    flex=None,
    policy=None,
    demand_periods=(),
):
    n = len(demand)
    return Scenario(
        demand=TimeSeries(demand),
        pv_cf=TimeSeries(pv_cf if pv_cf is not None else np.zeros(n)),
        tariff=Tariff(
            TimeSeries(energy_price),
            tuple(DemandPeriod(name, price, mask) for name, price, mask in demand_periods),
        ),
        policy=policy or NemPolicy.no_nem(),
        pv=pv,
        bes=bes,
        flex=flex,
    )


def arbitrage_battery(**kw):
    args = dict(rated_power=1.0, duration=1.0, round_trip_efficiency=1.0,
                scheme=BesScheme.GRID_CHARGE_NO_EXPORT, soc_init=0.0)
    args.update(kw)
    return BesSpec(**args)


def highs_reference(m, lb=None, ub=None):
    """Independent LP value via SciPy/HiGHS, for cross-checks only."""
    lb = m.lb if lb is None else lb
    ub = m.ub if ub is None else ub
    A = m.A.toarray()
    le, ge, eq = m.sense == "<", m.sense == ">", m.sense == "="
    A_ub = np.vstack([A[le], -A[ge]])
    b_ub = np.concatenate([m.rhs[le], -m.rhs[ge]])
    res = linprog(
        m.c,
        A_ub=A_ub if len(b_ub) else None,
        b_ub=b_ub if len(b_ub) else None,
        A_eq=A[eq] if eq.any() else None,
        b_eq=m.rhs[eq] if eq.any() else None,
        bounds=list(zip(lb, ub)),
        method="highs",
    )
    return res


@pytest.fixture(scope="session")
def mep_2day():
    return fixture_scenario("mep", policy="nem2", days=2)


@pytest.fixture(scope="session")
def pv_spec():
    return PvSpec(10.0, 1.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
