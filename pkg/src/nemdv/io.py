"""File formats.

Profiles are CSV with header ``hour,value``; ``hour`` is either a 0-based
step index or an ISO-8601 timestamp. Tariffs and scenarios are JSON.
Result tables and dispatch dumps are CSV with floats at 6 significant
digits.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .types import (
    DEFAULT_NBC,
    DEFAULT_YEAR,
    BesScheme,
    BesSpec,
    Calendar,
    DemandPeriod,
    FlexSpec,
    NemPolicy,
    PolicyKind,
    PvSpec,
    Scenario,
    Tariff,
    TimeSeries,
)


class InputError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


def fmt(x: float) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    out = f"{x:.6g}"
    return "0" if out == "-0" else out


# -- profiles ---------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    series: TimeSeries
    year: int | None = None


def _parse_hour(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    return dt.datetime.fromisoformat(text)


def read_profile(path) -> Profile:
    path = Path(path)
    values: list[float] = []
    first = prev = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["hour", "value"]:
            raise InputError("header must be 'hour,value'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise InputError(f"expected 2 fields, got {len(row)}", path, lineno)
            try:
                hour = _parse_hour(row[0])
            except ValueError:
                raise InputError(f"unparseable hour {row[0]!r}", path, lineno) from None
            try:
                value = float(row[1])
            except ValueError:
                raise InputError(f"unparseable value {row[1]!r}", path, lineno) from None
            if not math.isfinite(value):
                raise InputError(f"non-finite value {row[1]!r}", path, lineno)
            if prev is None:
                first = hour
            else:
                if type(hour) is not type(prev):
                    raise InputError("mixed index and timestamp hours", path, lineno)
                step = (
                    hour - prev
                    if isinstance(hour, int)
                    else (hour - prev) / dt.timedelta(hours=1)
                )
                if step == 0:
                    raise InputError(f"duplicate hour {row[0].strip()}", path, lineno)
                if step < 0:
                    raise InputError("hours must be strictly increasing", path, lineno)
                if step != 1:
                    raise InputError(
                        f"gap: expected hour after {prev}, got {row[0].strip()}", path, lineno
                    )
            prev = hour
            values.append(value)
    if not values:
        raise InputError("profile has no rows", path)
    if isinstance(first, dt.datetime):
        origin = dt.datetime(first.year, 1, 1, tzinfo=first.tzinfo)
        start = int((first - origin) / dt.timedelta(hours=1))
        return Profile(TimeSeries(values, start), first.year)
    return Profile(TimeSeries(values, first), None)


def load_profile(path) -> TimeSeries:
    """Read an hourly profile CSV into a validated series."""
    return read_profile(path).series


def write_profile(series: TimeSeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "value"])
        for k, v in enumerate(series.values):
            w.writerow([series.start_hour + k, fmt(float(v))])


def profile_calendar(
    profile: Profile, year: int | None = None, holidays: Sequence[dt.date] = ()
) -> Calendar:
    """Calendar labels (month, weekend-or-holiday, hour) for a loaded profile."""
    yr = year if year is not None else profile.year or DEFAULT_YEAR
    return Calendar.from_start(len(profile.series), profile.series.start_hour, yr, holidays)


# -- tariffs ----------------------------------------------------------------

_DAY_TYPES = {"weekday": False, "weekend": True, "holiday": True}


def _hour_set(spec, where: str) -> set[int]:
    if spec is None:
        return set(range(24))
    if isinstance(spec, str):
        try:
            lo, hi = (int(p) for p in spec.split("-"))
        except ValueError:
            raise InputError(f"{where}: hours range must look like '16-21'") from None
        return set(range(lo, hi)) if lo < hi else set(range(lo, 24)) | set(range(0, hi))
    hours = set(int(h) for h in spec)
    if any(not 0 <= h < 24 for h in hours):
        raise InputError(f"{where}: hours must lie in 0..23")
    return hours


def _period_mask(entry: dict, cal: Calendar, where: str) -> np.ndarray:
    months = set(entry.get("months") or range(1, 13))
    day_types = entry.get("day_types") or ["weekday", "weekend"]
    try:
        weekend_flags = {_DAY_TYPES[d] for d in day_types}
    except KeyError as exc:
        raise InputError(f"{where}: unknown day type {exc.args[0]!r}") from None
    hours = _hour_set(entry.get("hours"), where)
    return (
        np.isin(cal.month, sorted(months))
        & np.isin(cal.weekend, sorted(weekend_flags))
        & np.isin(cal.hour, sorted(hours))
    )


def materialize_tariff(spec: dict, cal: Calendar) -> Tariff:
    """Turn a period-rule tariff description into per-step prices and masks.

    Raises :class:`InputError` listing the first uncovered or doubly covered
    steps when energy periods do not partition the horizon.
    """
    n = len(cal)
    price = np.zeros(n)
    cover = np.zeros(n, dtype=int)
    for k, e in enumerate(spec.get("energy_periods", [])):
        where = f"energy_periods[{e.get('name', k)}]"
        mask = _period_mask(e, cal, where)
        price[mask] = float(e["price"])
        cover += mask
    bad = np.flatnonzero(cover != 1)
    if bad.size:
        detail = ", ".join(f"hour {int(t)} covered {int(cover[t])}x" for t in bad[:5])
        raise InputError(f"energy periods must cover every hour exactly once: {detail}")
    periods = []
    for k, e in enumerate(spec.get("demand_charges", [])):
        name = e.get("name", f"demand_{k}")
        periods.append(DemandPeriod(name, float(e["price"]), _period_mask(e, cal, name)))
    return Tariff(TimeSeries(price, 0), tuple(periods))


def load_tariff(path, cal: Calendar) -> Tariff:
    with Path(path).open() as fh:
        spec = json.load(fh)
    try:
        return materialize_tariff(spec, cal)
    except InputError as exc:
        raise InputError(str(exc), path) from None


# -- scenarios --------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    sweep: dict | None
    path: Path
    acc: TimeSeries | None


def _resolve(base: Path, ref: str) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else base / p


def policy_from_dict(d: dict, acc: TimeSeries | None) -> NemPolicy:
    kind = PolicyKind(str(d.get("type", "nonem")).lower())
    if kind is PolicyKind.NEM2:
        return NemPolicy.nem2(float(d.get("nbc", DEFAULT_NBC)))
    if kind is PolicyKind.NEM3:
        if acc is None:
            raise InputError("nem3 policy needs an 'acc' profile reference")
        return NemPolicy.nem3(acc)
    return NemPolicy(kind)


def load_scenario(path) -> ScenarioFile:
    """Read a scenario JSON file and every file it references.

    Keys: ``demand``, ``pv_cf``, ``tariff``, optional ``acc`` (paths relative
    to the scenario file), ``year``, ``holidays`` (ISO dates), ``pv``,
    ``bes``, ``flex``, ``policy`` and an optional ``sweep`` block.
    """
    path = Path(path)
    base = path.parent
    with path.open() as fh:
        d = json.load(fh)
    for key in ("demand", "pv_cf", "tariff"):
        if key not in d:
            raise InputError(f"missing required key {key!r}", path)
    demand = read_profile(_resolve(base, d["demand"]))
    pv_cf = load_profile(_resolve(base, d["pv_cf"]))
    holidays = [dt.date.fromisoformat(h) for h in d.get("holidays", [])]
    cal = profile_calendar(demand, d.get("year"), holidays)
    tariff = load_tariff(_resolve(base, d["tariff"]), cal)
    acc = load_profile(_resolve(base, d["acc"])) if d.get("acc") else None
    try:
        policy = policy_from_dict(d.get("policy", {}), acc)
        pv = PvSpec(**d["pv"]) if d.get("pv") is not None else None
        bes = None
        if d.get("bes") is not None:
            b = dict(d["bes"])
            if "scheme" in b:
                b["scheme"] = BesScheme(b["scheme"])
            bes = BesSpec(**b)
        flex = FlexSpec(**d["flex"]) if d.get("flex") is not None else None
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc), path) from None
    scenario = Scenario(
        demand=demand.series,
        pv_cf=pv_cf,
        tariff=tariff,
        policy=policy,
        pv=pv,
        bes=bes,
        flex=flex,
        calendar=cal,
    )
    return ScenarioFile(scenario, d.get("sweep"), path, acc)


# -- results ----------------------------------------------------------------

AXIS_COLUMNS = (
    "pv_ratio",
    "bes_power_ratio",
    "bes_duration_hours",
    "scheme",
    "flex_fraction",
    "recovery_hours",
    "policy",
)
RESULT_COLUMNS = AXIS_COLUMNS + (
    "demand_charge",
    "energy_charge",
    "export_revenue",
    "net_bill",
    "relative_bill",
    "status",
    "wall_ms",
)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return fmt(float(v))
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def write_results(rows: Iterable, path, timing: bool = False) -> None:
    """Write sweep rows as CSV.

    ``wall_ms`` is left blank unless ``timing`` is set, so that identical
    sweeps produce byte-identical files.
    """
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            bill = r.bill
            w.writerow(
                [_cell(r.axes.get(c)) for c in AXIS_COLUMNS]
                + [
                    _cell(bill.demand_charge_total if bill else None),
                    _cell(bill.energy_charge_total if bill else None),
                    _cell(bill.export_revenue if bill else None),
                    _cell(bill.net_bill if bill else None),
                    _cell(r.relative_bill) if r.relative_bill is not None else "undefined",
                    r.status,
                    _cell(round(r.wall_seconds * 1000.0, 1)) if timing else "",
                ]
            )


DISPATCH_COLUMNS = (
    "t",
    "p_pv_btm",
    "p_pv_exp",
    "p_cha",
    "p_dis_btm",
    "p_dis_exp",
    "d_dev_up",
    "d_dev_dn",
    "soc",
    "d_net",
    "zeta",
)


def write_dispatch(result, path) -> None:
    """Dump a solved scenario's per-step dispatch; ``zeta`` is blank outside S."""
    roles = DISPATCH_COLUMNS[1:-1]
    series = {r: result.series(r) for r in roles}
    zeta = result.zeta()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DISPATCH_COLUMNS)
        for t in range(len(series["d_net"])):
            w.writerow(
                [t]
                + [repr(float(series[r][t])) for r in roles]
                + [repr(float(zeta[t])) if t in zeta else ""]
            )


def read_dispatch(path) -> tuple[dict[str, np.ndarray], dict[int, float]]:
    path = Path(path)
    cols: dict[str, list[float]] = {c: [] for c in DISPATCH_COLUMNS[1:-1]}
    zeta: dict[int, float] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(DISPATCH_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise InputError(f"missing columns {sorted(missing)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                for c in cols:
                    cols[c].append(float(row[c]))
                if row["zeta"].strip():
                    zeta[int(row["t"])] = float(row["zeta"])
            except ValueError as exc:
                raise InputError(str(exc), path, lineno) from None
    return {c: np.array(v) for c, v in cols.items()}, zeta
