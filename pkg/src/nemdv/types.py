"""Domain types shared by the policy, formulation, solver and sweep layers.

All time series are hourly, so a power value in kW equals the energy in kWh
delivered over one step.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

DEFAULT_YEAR = 2019
DEFAULT_NBC = 0.02977


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Fixed-step hourly sequence.

    ``start_hour`` is the hour-of-year index of the first value
    (0 is January 1st, 00:00).
    """

    values: np.ndarray
    start_hour: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.values.ndim != 1:
            raise ValueError("TimeSeries values must be one-dimensional")

    def __len__(self) -> int:
        return len(self.values)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries(self.values[start:stop], self.start_hour + start)


@dataclass(frozen=True)
class Calendar:
    """Per-step calendar labels for a horizon.

    ``weekend`` is true for weekends and for supplied holidays.
    """

    month: np.ndarray
    weekend: np.ndarray
    hour: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "month", _frozen_array(self.month, int))
        object.__setattr__(self, "weekend", _frozen_array(self.weekend, bool))
        object.__setattr__(self, "hour", _frozen_array(self.hour, int))
        n = len(self.month)
        if len(self.weekend) != n or len(self.hour) != n:
            raise ValueError("calendar label arrays differ in length")

    def __len__(self) -> int:
        return len(self.month)

    @classmethod
    def from_start(
        cls,
        n_steps: int,
        start_hour: int = 0,
        year: int = DEFAULT_YEAR,
        holidays: Sequence[_dt.date] = (),
    ) -> "Calendar":
        origin = _dt.datetime(year, 1, 1)
        holidays = set(holidays)
        month, weekend, hour = [], [], []
        for k in range(n_steps):
            ts = origin + _dt.timedelta(hours=start_hour + k)
            month.append(ts.month)
            weekend.append(ts.weekday() >= 5 or ts.date() in holidays)
            hour.append(ts.hour)
        return cls(month, weekend, hour)

    def slice(self, start: int, stop: int) -> "Calendar":
        return Calendar(
            self.month[start:stop], self.weekend[start:stop], self.hour[start:stop]
        )

    def month_blocks(self) -> list[tuple[int, int]]:
        """Contiguous ``(start, stop)`` index ranges sharing one month label."""
        blocks = []
        start = 0
        for k in range(1, len(self.month) + 1):
            if k == len(self.month) or self.month[k] != self.month[start]:
                blocks.append((start, k))
                start = k
        return blocks


@dataclass(frozen=True)
class DemandPeriod:
    name: str
    price: float
    mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mask", _frozen_array(self.mask, bool))


@dataclass(frozen=True)
class Tariff:
    """TOU energy prices plus demand-charge periods.

    Demand-period masks may overlap and need not cover every step.
    """

    energy_price: TimeSeries
    demand_periods: tuple[DemandPeriod, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "demand_periods", tuple(self.demand_periods))

    def slice(self, start: int, stop: int) -> "Tariff":
        return Tariff(
            self.energy_price.slice(start, stop),
            tuple(
                DemandPeriod(p.name, p.price, p.mask[start:stop])
                for p in self.demand_periods
            ),
        )


class PolicyKind(str, Enum):
    NO_NEM = "nonem"
    NEM1 = "nem1"
    NEM2 = "nem2"
    NEM3 = "nem3"


@dataclass(frozen=True)
class NemPolicy:
    kind: PolicyKind
    nbc: float = DEFAULT_NBC
    acc_hourly: TimeSeries | None = None

    @classmethod
    def no_nem(cls) -> "NemPolicy":
        return cls(PolicyKind.NO_NEM)

    @classmethod
    def nem1(cls) -> "NemPolicy":
        return cls(PolicyKind.NEM1)

    @classmethod
    def nem2(cls, nbc: float = DEFAULT_NBC) -> "NemPolicy":
        return cls(PolicyKind.NEM2, nbc=nbc)

    @classmethod
    def nem3(cls, acc_hourly: TimeSeries) -> "NemPolicy":
        return cls(PolicyKind.NEM3, acc_hourly=acc_hourly)

    def slice(self, start: int, stop: int) -> "NemPolicy":
        if self.acc_hourly is None:
            return self
        return NemPolicy(self.kind, self.nbc, self.acc_hourly.slice(start, stop))


class BesScheme(str, Enum):
    """Battery management schemes for solar-plus-storage consumers."""

    GRID_CHARGE_NO_EXPORT = "grid_charge_no_export"
    PV_CHARGE_WITH_EXPORT = "pv_charge_with_export"
    GRID_CHARGE_WITH_EXPORT = "grid_charge_with_export"


@dataclass(frozen=True)
class PvSpec:
    rated_power: float
    inverter_efficiency: float = 0.96


@dataclass(frozen=True)
class BesSpec:
    """Battery specification.

    ``soc_min`` defaults to 0 and ``soc_init`` to half of the energy
    capacity (``rated_power * duration``).
    """

    rated_power: float
    duration: float
    round_trip_efficiency: float = 0.85
    scheme: BesScheme = BesScheme.GRID_CHARGE_WITH_EXPORT
    soc_min: float = 0.0
    soc_init: float | None = None

    def __post_init__(self):
        if self.soc_init is None:
            object.__setattr__(self, "soc_init", 0.5 * self.soc_max)
        object.__setattr__(self, "scheme", BesScheme(self.scheme))

    @property
    def soc_max(self) -> float:
        return self.rated_power * self.duration


@dataclass(frozen=True)
class FlexSpec:
    flex_fraction: float
    recovery_period: int


@dataclass(frozen=True)
class Scenario:
    """One consumer, one asset mix, one policy: the unit of a solve."""

    demand: TimeSeries
    pv_cf: TimeSeries
    tariff: Tariff
    policy: NemPolicy
    pv: PvSpec | None = None
    bes: BesSpec | None = None
    flex: FlexSpec | None = None
    calendar: Calendar | None = None

    def __post_init__(self):
        if self.calendar is None:
            object.__setattr__(
                self,
                "calendar",
                Calendar.from_start(len(self.demand), self.demand.start_hour),
            )

    @property
    def n_steps(self) -> int:
        return len(self.demand)

    @property
    def max_demand(self) -> float:
        return float(np.max(self.demand.values))

    def slice(self, start: int, stop: int) -> "Scenario":
        return Scenario(
            demand=self.demand.slice(start, stop),
            pv_cf=self.pv_cf.slice(start, stop),
            tariff=self.tariff.slice(start, stop),
            policy=self.policy.slice(start, stop),
            pv=self.pv,
            bes=self.bes,
            flex=self.flex,
            calendar=self.calendar.slice(start, stop),
        )


def _nonfinite(values: np.ndarray) -> bool:
    return not np.all(np.isfinite(values))


def validate_scenario(s: Scenario) -> list[str]:
    """Return every invariant violation of ``s``; an empty list means valid."""
    problems: list[str] = []
    n = len(s.demand)
    if n < 1:
        problems.append("demand: length must be >= 1")

    series = {
        "demand": s.demand.values,
        "pv_cf": s.pv_cf.values,
        "energy_price": s.tariff.energy_price.values,
    }
    if s.policy.acc_hourly is not None:
        series["acc_hourly"] = s.policy.acc_hourly.values
    for name, values in series.items():
        if len(values) != n:
            problems.append(f"{name}: length mismatch ({len(values)} != {n})")
        if _nonfinite(values):
            problems.append(f"{name}: non-finite entries")

    for k in np.flatnonzero(s.demand.values < 0):
        problems.append(f"demand[{k}] < 0")
    for k in np.flatnonzero(s.pv_cf.values < 0):
        problems.append(f"pv_cf[{k}] < 0")
    for k in np.flatnonzero(s.pv_cf.values > 1):
        problems.append(f"pv_cf[{k}] > 1")
    for k in np.flatnonzero(s.tariff.energy_price.values < 0):
        problems.append(f"energy_price[{k}] < 0")
    for p in s.tariff.demand_periods:
        if not np.isfinite(p.price) or p.price < 0:
            problems.append(f"demand_periods[{p.name}].price < 0")
        if len(p.mask) != len(s.tariff.energy_price):
            problems.append(f"demand_periods[{p.name}].mask: length mismatch")
    if len(s.calendar) != n:
        problems.append(f"calendar: length mismatch ({len(s.calendar)} != {n})")

    if s.policy.kind is PolicyKind.NEM2 and not s.policy.nbc >= 0:
        problems.append("policy.nbc < 0")
    if s.policy.kind is PolicyKind.NEM3 and s.policy.acc_hourly is None:
        problems.append("policy.acc_hourly: required for nem3")
    if s.policy.kind is not PolicyKind.NO_NEM and s.pv is None:
        problems.append("pv: NEM participation requires a PV asset")

    if s.pv is not None:
        if not s.pv.rated_power >= 0:
            problems.append("pv.rated_power < 0")
        if not 0 < s.pv.inverter_efficiency <= 1:
            problems.append("pv.inverter_efficiency outside (0, 1]")
    if s.bes is not None:
        b = s.bes
        if not b.rated_power >= 0:
            problems.append("bes.rated_power < 0")
        if not b.duration >= 0:
            problems.append("bes.duration < 0")
        if not 0 < b.round_trip_efficiency <= 1:
            problems.append("bes.round_trip_efficiency outside (0, 1]")
        if not 0 <= b.soc_min <= b.soc_init <= b.soc_max:
            problems.append("bes: requires 0 <= soc_min <= soc_init <= soc_max")
    if s.flex is not None:
        if not 0 <= s.flex.flex_fraction <= 1:
            problems.append("flex.flex_fraction outside [0, 1]")
        if int(s.flex.recovery_period) != s.flex.recovery_period or not (
            1 <= s.flex.recovery_period <= n
        ):
            problems.append("flex.recovery_period must be an integer in [1, |T|]")
    return problems


class ScenarioError(ValueError):
    """Raised when a scenario fails validation."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


def ensure_valid(s: Scenario) -> Scenario:
    problems = validate_scenario(s)
    if problems:
        raise ScenarioError(problems)
    return s
