"""SYNTHETIC consumer fixtures.

Stand-ins for the external datasets a real study ingests: building load
profiles, PV capacity factors, a B-19-style TOU tariff and hourly avoided
costs. Shapes and prices are invented but shaped like the real inputs:
a morning-and-evening-peaking consumer (MEP, hotel-like, 444 kW peak) and a
midday-peaking consumer (MDP, supermarket-like, 358 kW peak). None of these
numbers come from measured data.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

from .types import (
    DEFAULT_YEAR,
    BesScheme,
    BesSpec,
    Calendar,
    FlexSpec,
    NemPolicy,
    PolicyKind,
    PvSpec,
    Scenario,
    TimeSeries,
)

PEAK_KW = {"mep": 444.0, "mdp": 358.0}
MAX_NEM1_EXPORT_PRICE = 0.21585
MAX_NEM3_EXPORT_PRICE = 2.96644

SUMMER = [6, 7, 8, 9]
WINTER = [1, 2, 3, 4, 5, 10, 11, 12]
ALL_MONTHS = list(range(1, 13))

B19_LIKE_TARIFF = {
    "name": "synthetic B-19-like TOU rate",
    "energy_periods": [
        {"name": "summer_peak", "months": SUMMER, "hours": "16-21", "price": 0.21585},
        {"name": "summer_part_peak", "months": SUMMER, "hours": [14, 15, 21, 22],
         "price": 0.17236},
        {"name": "summer_off_peak", "months": SUMMER,
         "hours": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 23], "price": 0.14031},
        {"name": "winter_peak", "months": WINTER, "hours": "16-21", "price": 0.16954},
        {"name": "winter_super_off_peak", "months": WINTER, "hours": "9-14",
         "price": 0.10120},
        {"name": "winter_off_peak", "months": WINTER,
         "hours": [0, 1, 2, 3, 4, 5, 6, 7, 8, 14, 15, 21, 22, 23], "price": 0.13402},
    ],
    "demand_charges": [
        {"name": "max_demand", "price": 21.30},
        {"name": "summer_peak_demand", "months": SUMMER, "hours": "16-21", "price": 19.85},
        {"name": "summer_part_peak_demand", "months": SUMMER, "hours": [14, 15, 21, 22],
         "price": 5.40},
        {"name": "winter_peak_demand", "months": WINTER, "hours": "16-21", "price": 1.95},
    ],
}


def _hours(n_steps: int, start_hour: int, year: int):
    origin = dt.datetime(year, 1, 1)
    stamps = [origin + dt.timedelta(hours=start_hour + k) for k in range(n_steps)]
    hod = np.array([s.hour for s in stamps], dtype=float)
    doy = np.array([s.timetuple().tm_yday for s in stamps], dtype=float)
    weekend = np.array([s.weekday() >= 5 for s in stamps])
    month = np.array([s.month for s in stamps])
    day = np.array([(s - origin).days for s in stamps])
    return hod, doy, weekend, month, day


def _bump(h, centre, width):
    return np.exp(-0.5 * ((h - centre) / width) ** 2)


def demand_profile(
    kind: str, n_steps: int, start_hour: int = 0, year: int = DEFAULT_YEAR, seed: int = 7
) -> TimeSeries:
    """Hourly load scaled so the horizon maximum equals the consumer's peak."""
    kind = kind.lower()
    hod, doy, weekend, _, day = _hours(n_steps, start_hour, year)
    season = np.cos(2 * np.pi * (doy - 200) / 365.0)  # +1 mid-July
    rng = np.random.default_rng(seed)
    daily = 1.0 + 0.04 * rng.standard_normal(day.max() + 1)
    if kind == "mep":
        shape = (
            0.42
            + 0.30 * _bump(hod, 7.5, 1.4)
            + 0.55 * _bump(hod, 19.5, 1.8)
            + 0.08 * _bump(hod, 13.0, 2.5) * (1 + season)
        )
        shape = shape * np.where(weekend, 1.05, 1.0)
    elif kind == "mdp":
        shape = (
            0.50
            + 0.42 * _bump(hod, 14.0, 3.6)
            + 0.06 * _bump(hod, 15.0, 2.0) * (1 + season)
        )
        shape = shape * np.where(weekend, 0.96, 1.0)
    else:
        raise ValueError(f"unknown consumer kind {kind!r}; expected 'mep' or 'mdp'")
    raw = shape * daily[day]
    return TimeSeries(PEAK_KW[kind] * raw / raw.max(), start_hour)


def pv_capacity_factor(
    n_steps: int, start_hour: int = 0, year: int = DEFAULT_YEAR, seed: int = 11
) -> TimeSeries:
    """Clear-sky sine day with a seasonal day length and per-day cloudiness."""
    hod, doy, _, _, day = _hours(n_steps, start_hour, year)
    season = np.sin(2 * np.pi * (doy - 80) / 365.0)
    day_length = 12.0 + 2.4 * season
    sunrise = 12.8 - day_length / 2
    phase = (hod + 0.5 - sunrise) / day_length
    sun = np.where((phase > 0) & (phase < 1), np.sin(np.pi * np.clip(phase, 0, 1)), 0.0)
    peak = 0.70 + 0.12 * season
    rng = np.random.default_rng(seed)
    clear = rng.uniform(0.55, 1.0, day.max() + 1)
    summer_day = np.zeros(day.max() + 1, dtype=bool)
    summer_day[day] = season > 0
    clear[summer_day] = np.maximum(clear[summer_day], 0.9)
    cf = np.clip(peak * sun * clear[day], 0.0, 1.0)
    return TimeSeries(cf, start_hour)


def avoided_costs(
    n_steps: int, start_hour: int = 0, year: int = DEFAULT_YEAR, seed: int = 13
) -> TimeSeries:
    """Hourly avoided-cost values: cheap midday, high summer weekday evenings."""
    hod, _, weekend, month, _ = _hours(n_steps, start_hour, year)
    base = 0.045 + 0.035 * _bump(hod, 20.0, 2.5) - 0.02 * _bump(hod, 12.5, 2.5)
    spike = np.zeros(n_steps)
    evening_19 = {7: 0.55, 8: 1.45, 9: MAX_NEM3_EXPORT_PRICE}
    evening_18 = {7: 0.30, 8: 0.85, 9: 1.20}
    for mo, v in evening_19.items():
        spike[(month == mo) & (hod == 19) & ~weekend] = v
    for mo, v in evening_18.items():
        spike[(month == mo) & (hod == 18) & ~weekend] = v
    rng = np.random.default_rng(seed)
    noise = 1.0 + 0.25 * rng.uniform(-1, 1, n_steps)
    values = np.where(spike > 0, spike, base * noise)
    return TimeSeries(values, start_hour)


def horizon(days: int = 7, start: dt.date = dt.date(2019, 9, 2)) -> tuple[int, int, int]:
    """(n_steps, start_hour, year) for ``days`` whole days from ``start``."""
    start_hour = (start - dt.date(start.year, 1, 1)).days * 24
    return days * 24, start_hour, start.year


def policy_for(kind: PolicyKind | str, acc: TimeSeries | None = None) -> NemPolicy:
    kind = PolicyKind(kind)
    if kind is PolicyKind.NEM3:
        return NemPolicy.nem3(acc)
    return NemPolicy(kind)


def fixture_scenario(
    kind: str = "mep",
    policy: PolicyKind | str = PolicyKind.NEM2,
    pv_ratio: float = 1.0,
    bes_ratio: float | None = None,
    bes_duration: float = 2.0,
    scheme: BesScheme | str = BesScheme.GRID_CHARGE_WITH_EXPORT,
    flex_fraction: float | None = None,
    recovery_period: int = 6,
    days: int = 7,
    start: dt.date = dt.date(2019, 9, 2),
) -> Scenario:
    """A ready-to-solve SYNTHETIC scenario for tests and demos."""
    from .io import materialize_tariff

    n, h0, year = horizon(days, start)
    cal = Calendar.from_start(n, h0, year)
    demand = demand_profile(kind, n, h0, year)
    peak = PEAK_KW[kind.lower()]
    acc = avoided_costs(n, h0, year)
    bes = None
    if bes_ratio is not None:
        bes = BesSpec(bes_ratio * peak, bes_duration, scheme=BesScheme(scheme))
    flex = None
    if flex_fraction is not None:
        flex = FlexSpec(flex_fraction, recovery_period)
    return Scenario(
        demand=demand,
        pv_cf=pv_capacity_factor(n, h0, year),
        tariff=materialize_tariff(B19_LIKE_TARIFF, cal),
        policy=policy_for(policy, acc),
        pv=PvSpec(pv_ratio * peak),
        bes=bes,
        flex=flex,
        calendar=cal,
    )


def write_fixture_files(
    directory,
    kind: str = "mep",
    policy: str = "nem2",
    pv: dict | None = None,
    bes: dict | None = None,
    flex: dict | None = None,
    sweep: dict | None = None,
    days: int = 7,
    start: dt.date = dt.date(2019, 9, 2),
) -> Path:
    """Write SYNTHETIC profile, tariff and scenario files; returns the scenario path.

    ``pv`` defaults to a PV array sized at the consumer's peak demand.
    """
    import json

    from .io import write_profile

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n, h0, year = horizon(days, start)
    write_profile(demand_profile(kind, n, h0, year), directory / "demand.csv")
    write_profile(pv_capacity_factor(n, h0, year), directory / "pv_cf.csv")
    write_profile(avoided_costs(n, h0, year), directory / "acc.csv")
    (directory / "tariff.json").write_text(json.dumps(B19_LIKE_TARIFF, indent=2))
    scenario = {
        "demand": "demand.csv",
        "pv_cf": "pv_cf.csv",
        "acc": "acc.csv",
        "tariff": "tariff.json",
        "year": year,
        "policy": {"type": policy},
        "pv": pv if pv is not None else {"rated_power": PEAK_KW[kind.lower()]},
        "bes": bes,
        "flex": flex,
    }
    if sweep is not None:
        scenario["sweep"] = sweep
    path = directory / "scenario.json"
    path.write_text(json.dumps(scenario, indent=2))
    return path
