"""
Battery management schemes
==========================

Compares the three ways a battery may be run: charging from the grid
without exporting, charging from PV only with exports, and charging from
the grid with exports. Under NEM 2.0 battery exports earn the retail rate
less a small charge, so they rarely change the bill.
"""

# %%
from nemdv.sweep import SweepConfig, run_sweep
from nemdv.synthetic import fixture_scenario
from nemdv.types import BesScheme, PolicyKind

cfg = SweepConfig(
    fixture_scenario("mep", policy="nem3"),
    pv_ratio=(1.0,),
    bes_power_ratio=(0.5, 1.0),
    bes_duration_hours=(2.0,),
    scheme=tuple(BesScheme),
    policy=(PolicyKind.NEM2, PolicyKind.NEM3),
)
rows = run_sweep(cfg)

# %%
# The last row is the PV-only, no-NEM baseline every row is divided by.
for r in rows:
    a = r.axes
    label = "baseline" if r.is_baseline else f"{a['bes_power_ratio']} {a['scheme'].value}"
    print(f"{a['policy'].value:6s} {label:32s} relative {r.relative_bill:.4f}")
