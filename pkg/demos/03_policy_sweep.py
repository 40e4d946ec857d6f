"""
Solar-only bills across policies
================================

Sweeps PV size from 0 to 150% of peak demand for both synthetic consumers
and expresses each bill relative to the no-NEM bill at the same PV size.
"""

# %%
from pathlib import Path

from nemdv.io import write_results
from nemdv.sweep import SweepConfig, run_sweep
from nemdv.synthetic import fixture_scenario

tables = {}
for kind in ("mep", "mdp"):
    cfg = SweepConfig(fixture_scenario(kind, policy="nem3"), pv_ratio=(0.0, 0.5, 1.0, 1.5))
    tables[kind] = run_sweep(cfg)

# %%
for kind, rows in tables.items():
    print(kind)
    for r in rows:
        print(f"  pv {r.axes['pv_ratio']:.1f}  {r.axes['policy'].value:6s}"
              f"  bill {r.bill.net_bill:9.2f}  relative {r.relative_bill:.3f}")

# %%
out = Path("solar_sweep_mep.csv")
write_results(tables["mep"], out)
print("wrote", out.resolve())
