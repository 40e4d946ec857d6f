import datetime as dt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nemdv.policy import (
    AlignmentError,
    average_by_calendar,
    build_export_prices,
    build_export_rules,
    compute_export_window,
    resolve_export_flags,
)
from nemdv.synthetic import fixture_scenario
from nemdv.types import BesScheme, Calendar, NemPolicy, PolicyKind, TimeSeries

CAL2 = Calendar.from_start(2)
prices = st.lists(st.floats(0, 3, allow_nan=False), min_size=1, max_size=48)


def test_nem1_equals_energy_price():
    out = build_export_prices(NemPolicy.nem1(), TimeSeries([0.20, 0.30]), CAL2)
    assert list(out.values) == [0.20, 0.30]


def test_nem2_subtracts_nbc():
    cal = Calendar.from_start(1)
    out = build_export_prices(NemPolicy.nem2(0.02977), TimeSeries([0.21585]), cal)
    assert out.values[0] == pytest.approx(0.18608, abs=1e-12)


def test_nem2_keeps_negative_prices():
    cal = Calendar.from_start(1)
    out = build_export_prices(NemPolicy.nem2(0.02977), TimeSeries([0.01]), cal)
    assert out.values[0] == pytest.approx(0.01 - 0.02977)


def test_nem3_averages_same_bucket():
    # 2019-09-03 and 2019-09-04 are weekdays; hour 18 on both
    start = (dt.date(2019, 9, 3) - dt.date(2019, 1, 1)).days * 24
    cal = Calendar.from_start(48, start, 2019)
    acc = np.zeros(48)
    acc[18], acc[42] = 0.10, 0.30
    out = build_export_prices(NemPolicy.nem3(TimeSeries(acc)), TimeSeries(np.zeros(48)), cal)
    assert out.values[18] == pytest.approx(0.20)
    assert out.values[42] == pytest.approx(0.20)


def test_nem3_separates_weekends():
    # 2019-09-06 is a Friday, 09-07 a Saturday
    start = (dt.date(2019, 9, 6) - dt.date(2019, 1, 1)).days * 24
    cal = Calendar.from_start(48, start, 2019)
    acc = np.arange(48, dtype=float)
    out = average_by_calendar(acc, cal)
    np.testing.assert_array_equal(out, acc)


def test_nem3_misaligned_acc():
    with pytest.raises(AlignmentError):
        build_export_prices(NemPolicy.nem3(TimeSeries([0.1])), TimeSeries([0.1, 0.2]), CAL2)


def test_no_nem_is_zero():
    out = build_export_prices(NemPolicy.no_nem(), TimeSeries([0.2, 0.3]), CAL2)
    assert list(out.values) == [0.0, 0.0]


def test_window_strict():
    assert compute_export_window(TimeSeries([0.5]), TimeSeries([0.3])) == (0,)
    assert compute_export_window(TimeSeries([0.3, 0.2]), TimeSeries([0.3, 0.2])) == ()


def test_window_length_mismatch():
    with pytest.raises(AlignmentError):
        compute_export_window(TimeSeries([0.5]), TimeSeries([0.3, 0.1]))


@pytest.mark.parametrize(
    "policy, scheme, expected",
    [
        (NemPolicy.no_nem(), None, (False, False)),
        (NemPolicy.no_nem(), BesScheme.GRID_CHARGE_WITH_EXPORT, (False, False)),
        (NemPolicy.nem3(TimeSeries([0.0])), BesScheme.PV_CHARGE_WITH_EXPORT, (True, True)),
        (NemPolicy.nem2(), BesScheme.GRID_CHARGE_NO_EXPORT, (True, False)),
        (NemPolicy.nem1(), BesScheme.GRID_CHARGE_WITH_EXPORT, (True, True)),
        (NemPolicy.nem1(), None, (True, False)),
    ],
)
def test_export_flags(policy, scheme, expected):
    assert resolve_export_flags(policy, scheme) == expected


def test_export_flags_strict_reading():
    assert resolve_export_flags(
        NemPolicy.nem2(), BesScheme.GRID_CHARGE_NO_EXPORT, True
    ) == (False, False)


@given(prices, st.floats(0, 0.1, allow_nan=False))
def test_nem2_is_nem1_minus_nbc(values, nbc):
    cal = Calendar.from_start(len(values))
    en = TimeSeries(values)
    one = build_export_prices(NemPolicy.nem1(), en, cal).values
    two = build_export_prices(NemPolicy.nem2(nbc), en, cal).values
    np.testing.assert_array_equal(two, en.values - nbc)
    np.testing.assert_array_equal(one, en.values)


@given(prices, st.floats(1e-6, 0.1, allow_nan=False))
def test_window_empty_except_nem3(values, nbc):
    cal = Calendar.from_start(len(values))
    en = TimeSeries(values)
    for policy in (NemPolicy.no_nem(), NemPolicy.nem1(), NemPolicy.nem2(nbc)):
        assert compute_export_window(build_export_prices(policy, en, cal), en) == ()


@given(prices, st.integers(0, 8000))
def test_averaging_idempotent(values, start):
    cal = Calendar.from_start(len(values), start)
    once = average_by_calendar(np.array(values), cal)
    twice = average_by_calendar(once, cal)
    np.testing.assert_allclose(twice, once, rtol=1e-12, atol=1e-15)


def test_fixture_nem3_window_is_evening_weekdays():
    s = fixture_scenario("mep", policy=PolicyKind.NEM3)
    rules = build_export_rules(s)
    hours = {int(s.calendar.hour[t]) for t in rules.s_set}
    assert hours <= {18, 19}
    assert 0 < len(rules.s_set) <= 60
