"""
Solve one week of PV + battery dispatch
=======================================

A hotel-like consumer (synthetic, 444 kW peak) with PV sized at its peak
and a 2-hour battery at half that power, billed on a B-19-style tariff
under NEM 3.0.
"""

# %%
from nemdv.engine import solve_scenario
from nemdv.formulation import audit_feasibility, simultaneous_bes_steps
from nemdv.synthetic import fixture_scenario

s = fixture_scenario("mep", policy="nem3", pv_ratio=1.0, bes_ratio=0.5)
res = solve_scenario(s)
bill = res.bill
print(res.status.value, f"in {res.wall_seconds:.2f}s")
print(f"demand charges {bill.demand_charge_total:10.2f} $")
print(f"energy charges {bill.energy_charge_total:10.2f} $")
print(f"export revenue {bill.export_revenue:10.2f} $")
print(f"net bill       {bill.net_bill:10.2f} $")

# %%
# Independent checks: every model row holds, and the solver objective is
# the bill recomputed from the dispatch.
for m in res.months:
    print("violations:", audit_feasibility(m.dispatch, m.model))
    print("objective - bill:", m.dispatch.objective - m.bill.net_bill)
    print("steps charging and discharging at once:", simultaneous_bes_steps(m.dispatch))

# %%
soc = res.series("soc")
d_net = res.series("d_net")
print("state of charge range:", soc.min().round(1), "to", soc.max().round(1), "kWh")
print(f"peak net demand {d_net.max():.1f} kW vs peak demand {s.max_demand:.1f} kW")
