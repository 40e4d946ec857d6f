"""Export prices and export eligibility for each net-metering policy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import BesScheme, Calendar, NemPolicy, PolicyKind, Scenario, TimeSeries


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class ExportRules:
    export_price: TimeSeries
    pv_export_allowed: bool
    bes_export_allowed: bool
    s_set: tuple[int, ...]

    def slice(self, start: int, stop: int) -> "ExportRules":
        return ExportRules(
            self.export_price.slice(start, stop),
            self.pv_export_allowed,
            self.bes_export_allowed,
            tuple(s - start for s in self.s_set if start <= s < stop),
        )


def average_by_calendar(values: np.ndarray, calendar: Calendar) -> np.ndarray:
    """Replace each value by the mean over all steps with the same
    (month, weekday/weekend-or-holiday, hour-of-day) label."""
    values = np.asarray(values, dtype=float)
    if len(values) != len(calendar):
        raise AlignmentError(
            f"series length {len(values)} does not match calendar length {len(calendar)}"
        )
    keys = (
        calendar.month.astype(np.int64) * 100
        + calendar.weekend.astype(np.int64) * 50
        + calendar.hour.astype(np.int64)
    )
    _, inverse = np.unique(keys, return_inverse=True)
    sums = np.bincount(inverse, weights=values)
    counts = np.bincount(inverse)
    return sums[inverse] / counts[inverse]


def build_export_prices(
    policy: NemPolicy, energy_price: TimeSeries, calendar: Calendar
) -> TimeSeries:
    n = len(energy_price)
    if len(calendar) != n:
        raise AlignmentError(f"calendar covers {len(calendar)} steps, horizon has {n}")
    kind = policy.kind
    if kind is PolicyKind.NO_NEM:
        out = np.zeros(n)
    elif kind is PolicyKind.NEM1:
        out = energy_price.values.copy()
    elif kind is PolicyKind.NEM2:
        # negative values are kept; the export variables then simply go unused
        out = energy_price.values - policy.nbc
    elif kind is PolicyKind.NEM3:
        acc = policy.acc_hourly
        if acc is None or len(acc) != n:
            got = "none" if acc is None else len(acc)
            raise AlignmentError(f"avoided-cost series covers {got} steps, horizon has {n}")
        out = average_by_calendar(acc.values, calendar)
    else:  # pragma: no cover
        raise ValueError(kind)
    return TimeSeries(out, energy_price.start_hour)


def compute_export_window(
    export_price: TimeSeries, energy_price: TimeSeries
) -> tuple[int, ...]:
    """Steps where exporting pays strictly more than importing costs."""
    if len(export_price) != len(energy_price):
        raise AlignmentError(
            f"length mismatch: export {len(export_price)}, energy {len(energy_price)}"
        )
    return tuple(int(k) for k in np.flatnonzero(export_price.values > energy_price.values))


def resolve_export_flags(
    policy: NemPolicy,
    scheme: BesScheme | None,
    block_pv_exports_without_bes_export: bool = False,
) -> tuple[bool, bool]:
    """Return ``(pv_export_allowed, bes_export_allowed)``.

    Under ``GRID_CHARGE_NO_EXPORT`` only battery exports are blocked by
    default; ``block_pv_exports_without_bes_export`` applies the stricter
    reading in which that scheme forbids PV exports as well.
    """
    if policy.kind is PolicyKind.NO_NEM:
        return False, False
    if scheme is None:
        return True, False
    if scheme is BesScheme.GRID_CHARGE_NO_EXPORT:
        return not block_pv_exports_without_bes_export, False
    return True, True


def build_export_rules(
    s: Scenario, block_pv_exports_without_bes_export: bool = False
) -> ExportRules:
    energy = s.tariff.energy_price
    price = build_export_prices(s.policy, energy, s.calendar)
    scheme = s.bes.scheme if s.bes is not None else None
    pv_ok, bes_ok = resolve_export_flags(
        s.policy, scheme, block_pv_exports_without_bes_export
    )
    if s.pv is None:
        pv_ok = False
    return ExportRules(price, pv_ok, bes_ok, compute_export_window(price, energy))
