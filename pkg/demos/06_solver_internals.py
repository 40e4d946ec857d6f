"""
Inside the solver
=================

The LP relaxations run on a bounded-variable revised simplex, and branch
and bound handles the export indicators. This script solves two toy
models small enough to check by hand.
"""

# %%
import numpy as np

from nemdv.formulation import build_milp, extract_dispatch, format_lp
from nemdv.policy import ExportRules, build_export_rules
from nemdv.solver import solve_lp, solve_milp
from nemdv.types import BesScheme, BesSpec, DemandPeriod, NemPolicy, PvSpec, Scenario, Tariff, TimeSeries


def toy(demand, price, cf=None, pv=None, bes=None):
    n = len(demand)
    return Scenario(TimeSeries(demand), TimeSeries(cf if cf is not None else np.zeros(n)),
                    Tariff(TimeSeries(price), ()), NemPolicy.no_nem(), pv=pv, bes=bes)


# %%
# Three hours, cheap-cheap-expensive, a 1 kWh lossless battery starting
# empty. Buying 1 kWh early at 0.10 and discharging it at 0.50 gives 0.10.
s = toy([0.0, 0.0, 1.0], [0.1, 0.1, 0.5],
        bes=BesSpec(1.0, 1.0, 1.0, BesScheme.GRID_CHARGE_NO_EXPORT, soc_init=0.0))
m = build_milp(s, build_export_rules(s))
print(format_lp(m))
for engine in ("simplex", "highs"):
    sol = solve_lp(m, engine=engine)
    print(engine, sol.status.value, sol.objective, f"{sol.iterations} iterations")

# %%
# Two export-window hours: PV covers demand in hour 0 only, so only that
# hour can export. The optimum sets the hour-0 indicator and bills -0.20.
s = toy([1.0, 1.0], [0.3, 0.3], cf=[1.0, 0.0], pv=PvSpec(2.0, 1.0))
rules = ExportRules(TimeSeries([0.5, 0.4]), True, False, (0, 1))
m = build_milp(s, rules)
raw = solve_milp(m, engine="simplex")
d = extract_dispatch(m, raw)
print(raw.status.value, raw.objective, "nodes", raw.nodes, "indicators", d.zeta)
