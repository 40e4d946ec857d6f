"""
Export prices under each net-metering policy
============================================

Builds the hourly export compensation for one synthetic week and shows
which hours fall in the export window, i.e. where exporting pays more
than buying.
"""

# %%
import numpy as np

from nemdv.policy import build_export_prices, compute_export_window
from nemdv.synthetic import avoided_costs, fixture_scenario
from nemdv.types import NemPolicy

s = fixture_scenario("mep", policy="nem3")
energy = s.tariff.energy_price
print("hours in horizon:", s.n_steps)

# %%
# NEM 1.0 credits exports at the retail rate, NEM 2.0 subtracts the
# non-bypassable charge, NEM 3.0 uses calendar-averaged avoided costs.
acc = avoided_costs(s.n_steps, s.demand.start_hour)
policies = {
    "nonem": NemPolicy.no_nem(),
    "nem1": NemPolicy.nem1(),
    "nem2": NemPolicy.nem2(),
    "nem3": NemPolicy.nem3(acc),
}
for name, policy in policies.items():
    exp = build_export_prices(policy, energy, s.calendar)
    window = compute_export_window(exp, energy)
    print(f"{name:6s} mean export price {exp.values.mean():.4f} $/kWh, "
          f"{len(window)} hours above retail")

# %%
# The NEM 3.0 window sits on weekday evenings.
exp = build_export_prices(policies["nem3"], energy, s.calendar)
window = compute_export_window(exp, energy)
print("window hours of day:", sorted({int(h) for h in s.calendar.hour[list(window)]}))
print(f"largest spread: {np.max(exp.values - energy.values):.4f} $/kWh")
