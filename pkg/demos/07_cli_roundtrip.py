"""
Files in, files out
===================

Writes a synthetic scenario to disk and drives the ``nemdv`` command line:
export prices, a solve with dispatch dump, an audit of that dump and a
small sweep.
"""

# %%
import tempfile
from pathlib import Path

from nemdv.cli import main
from nemdv.synthetic import write_fixture_files

work = Path(tempfile.mkdtemp(prefix="nemdv-demo-"))
scenario = write_fixture_files(
    work, kind="mep", policy="nem3",
    bes={"rated_power": 222.0, "duration": 2.0},
    sweep={"pv_ratio": [0.5, 1.0], "policy": ["nem2", "nem3", "nonem"]},
    days=2,
)
print(scenario.read_text())

# %%
main(["prices", "--scenario", str(scenario), "--out", str(work / "prices.csv")])
print((work / "prices.csv").read_text().splitlines()[:4])

# %%
code = main(["solve", "--scenario", str(scenario), "--out", str(work / "dispatch.csv")])
print("solve exit", code)
print("audit exit", main(["audit", "--scenario", str(scenario),
                           "--dispatch", str(work / "dispatch.csv")]))

# %%
main(["sweep", "--scenario", str(scenario), "--out", str(work / "sweep.csv"), "--jobs", "2"])
print((work / "sweep.csv").read_text())
