"""
Flexible demand and recovery periods
====================================

Lets a share of each hour's demand move, provided the shifted energy is
paid back within a rolling recovery window.
"""

# %%
from nemdv.engine import solve_scenario
from nemdv.synthetic import fixture_scenario

for alpha in (0.0, 0.25, 0.5, 1.0):
    s = fixture_scenario("mdp", policy="nem3", flex_fraction=alpha, recovery_period=6)
    print(f"flex {alpha:4.2f}: bill {solve_scenario(s).bill.net_bill:9.2f}")

# %%
# Longer recovery windows loosen the payback rule, so the bill never rises.
for width in (2, 6, 12, 24):
    s = fixture_scenario("mdp", policy="nem3", flex_fraction=0.5, recovery_period=width)
    res = solve_scenario(s)
    shifted = res.series("d_dev_up").sum()
    print(f"recovery {width:2d} h: bill {res.bill.net_bill:9.2f}, shifted {shifted:8.1f} kWh")
