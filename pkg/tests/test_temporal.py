import calendar
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zonalclim.errors import (FrequencyError, UnsupportedVariableError,
                              ValidationError)
from zonalclim.temporal import (ThresholdSpec, count_exceedance_days,
                                empirical_quantile, upscale)
from zonalclim.zonal import SeriesTable

from .oracles import naive_quantile


def monthly_table(values_by_region, variable="temperature", units="degC",
                  year=2001):
    rows = []
    for rid, values in values_by_region.items():
        for m, v in enumerate(values, start=1):
            rows.append((rid, f"{year:04d}-{m:02d}", v))
    return SeriesTable("L0", variable, units, "unweighted", None, "monthly",
                       tuple(rows))


def daily_table(values_by_region, year=2001, months=(1,)):
    rows = []
    for rid, values in values_by_region.items():
        i = 0
        for m in months:
            for d in range(1, calendar.monthrange(year, m)[1] + 1):
                if i >= len(values):
                    break
                rows.append((rid, f"{year:04d}-{m:02d}-{d:02d}", values[i]))
                i += 1
    return SeriesTable("L0", "temperature", "degC", "unweighted", None,
                       "daily", tuple(rows))


class TestUpscale:
    def test_constant_monthly_temperature_to_annual_mean(self):
        table = monthly_table({"A": [3.5] * 12})
        out = upscale(table, "annual", "mean")
        assert out.rows == (("A", "2001", 3.5),)
        assert out.frequency == "annual"

    def test_monthly_precipitation_annual_sum(self):
        table = monthly_table({"A": [10.0, 20.0, 30.0] + [0.0] * 9},
                              variable="precipitation", units="mm")
        out = upscale(table, "annual", "sum")
        assert out.rows == (("A", "2001", 60.0),)

    def test_any_missing_month_poisons_the_year(self):
        values = [1.0] * 12
        values[6] = None
        out = upscale(monthly_table({"A": values}), "annual", "mean")
        assert out.rows == (("A", "2001", None),)

    def test_spei_rejected(self):
        table = monthly_table({"A": [0.1] * 12}, variable="spei", units="1")
        with pytest.raises(UnsupportedVariableError):
            upscale(table, "annual", "mean")

    def test_target_must_be_strictly_coarser(self):
        table = monthly_table({"A": [1.0] * 12})
        with pytest.raises(FrequencyError):
            upscale(table, "monthly", "mean")
        annual = upscale(table, "annual", "mean")
        with pytest.raises(FrequencyError):
            upscale(annual, "annual", "mean")

    def test_daily_to_monthly_grouping(self):
        vals = [float(d) for d in range(1, 32)]
        out = upscale(daily_table({"A": vals}), "monthly", "mean")
        assert out.rows == (("A", "2001-01", sum(vals) / 31),)

    def test_sum_additive_over_disjoint_subperiods(self):
        jan = [1.0] * 31
        feb = [2.0] * 28
        table = daily_table({"A": jan + feb}, months=(1, 2))
        monthly = upscale(table, "monthly", "sum")
        annual = upscale(table, "annual", "sum")
        total = math.fsum(v for _, _, v in monthly.rows)
        assert annual.rows[0][2] == pytest.approx(total, rel=1e-15)


class TestEmpiricalQuantile:
    def test_q0_is_min_q1_is_max(self):
        values = [5.0, -1.0, 3.0, 8.0]
        assert empirical_quantile(values, 0.0) == -1.0
        assert empirical_quantile(values, 1.0) == 8.0

    def test_median_interpolates(self):
        assert empirical_quantile([1.0, 2.0, 3.0, 4.0], 0.5) == 2.5

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            empirical_quantile([], 0.5)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40),
           st.floats(0, 1), st.floats(0, 1))
    def test_matches_oracle_and_monotone_in_q(self, values, q1, q2):
        got = empirical_quantile(values, q1)
        assert got == pytest.approx(naive_quantile(values, q1), abs=1e-9)
        lo, hi = sorted((q1, q2))
        assert empirical_quantile(values, lo) <= empirical_quantile(values, hi) + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=30),
           st.floats(0, 1), st.floats(0.1, 5), st.floats(-20, 20))
    def test_affine_equivariance(self, values, q, a, b):
        base = empirical_quantile(values, q)
        scaled = empirical_quantile([a * v + b for v in values], q)
        assert scaled == pytest.approx(a * base + b, abs=1e-7)


class TestExceedanceCounts:
    def test_all_below_absolute_threshold(self):
        table = daily_table({"A": [5.0] * 31})
        out = count_exceedance_days(table, ThresholdSpec("absolute", 20.0, "month"))
        assert out.rows == (("A", "2001-01", 0),)
        assert out.units == "days" and out.frequency == "monthly"

    def test_hand_counted_month(self):
        vals = [25.0] * 5 + [15.0] * 26
        out = count_exceedance_days(daily_table({"A": vals}),
                                    ThresholdSpec("absolute", 20.0, "month"))
        assert out.rows == (("A", "2001-01", 5),)

    def test_strict_inequality_at_the_threshold(self):
        vals = [20.0] * 10 + [20.5] * 21
        out = count_exceedance_days(daily_table({"A": vals}),
                                    ThresholdSpec("absolute", 20.0, "month"))
        assert out.rows[0][2] == 21

    def test_quantile_one_counts_nothing(self):
        rng = np.random.default_rng(8)
        vals = list(rng.normal(10, 5, 59))
        out = count_exceedance_days(daily_table({"A": vals}, months=(1, 2)),
                                    ThresholdSpec("quantile", 1.0, "month"))
        assert all(v == 0 for _, _, v in out.rows)

    def test_quantile_threshold_uses_full_history(self):
        # q=0.4 of the full 59-day history falls inside the February 10s, so
        # every January day exceeds it; a per-January quantile would be 30
        # and count nothing.
        jan = [30.0] * 31
        feb = [10.0] * 28
        out = count_exceedance_days(daily_table({"A": jan + feb}, months=(1, 2)),
                                    ThresholdSpec("quantile", 0.4, "month"))
        by_period = {ts: v for _, ts, v in out.rows}
        assert by_period["2001-01"] == 31
        assert by_period["2001-02"] == 0

    def test_missing_days_neither_count_nor_enter_history(self):
        vals = [25.0] * 5 + [None] * 5 + [15.0] * 21
        out = count_exceedance_days(daily_table({"A": vals}),
                                    ThresholdSpec("absolute", 20.0, "month"))
        assert out.rows == (("A", "2001-01", 5),)

    def test_region_with_no_data_missing_in_quantile_mode(self):
        table = daily_table({"A": [None] * 31, "B": [1.0] * 31})
        out = count_exceedance_days(table, ThresholdSpec("quantile", 0.9, "month"))
        by_region = {rid: v for rid, _, v in out.rows}
        assert by_region["A"] is None
        assert by_region["B"] == 0

    def test_non_daily_input_rejected(self):
        with pytest.raises(FrequencyError):
            count_exceedance_days(monthly_table({"A": [1.0] * 12}),
                                  ThresholdSpec("absolute", 0.0, "month"))

    def test_count_monotone_in_absolute_threshold(self):
        rng = np.random.default_rng(3)
        vals = list(rng.normal(15, 10, 31))
        table = daily_table({"A": vals})
        counts = []
        for thr in (-20.0, 0.0, 15.0, 30.0, 60.0):
            out = count_exceedance_days(table, ThresholdSpec("absolute", thr, "month"))
            counts.append(out.rows[0][2])
        assert counts == sorted(counts, reverse=True)
        assert all(0 <= c <= 31 for c in counts)

    def test_q90_counts_about_ten_percent(self):
        rng = np.random.default_rng(17)
        n = 1826  # 2001-2005 inclusive, one leap year; all values distinct
        vals = list(rng.permutation(np.arange(n) * 0.01 + 0.001))
        rows = []
        i = 0
        for year in range(2001, 2006):
            for m in range(1, 13):
                for d in range(1, calendar.monthrange(year, m)[1] + 1):
                    rows.append(("A", f"{year:04d}-{m:02d}-{d:02d}", vals[i]))
                    i += 1
        table = SeriesTable("L0", "temperature", "degC", "unweighted", None,
                            "daily", tuple(rows))
        out = count_exceedance_days(table, ThresholdSpec("quantile", 0.90, "year"))
        total = sum(v for _, _, v in out.rows)
        assert abs(total - 0.10 * n) <= 0.02 * n

    def test_threshold_spec_validation(self):
        with pytest.raises(ValidationError):
            ThresholdSpec("quantile", 1.5, "month")
        with pytest.raises(ValidationError):
            ThresholdSpec("absolute", 1.0, "week")
        with pytest.raises(ValidationError):
            ThresholdSpec("relative", 0.5, "month")
