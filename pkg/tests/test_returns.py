"""Return construction and summary statistics."""

import datetime as dt
import math

import numpy as np
import pytest

from spillnet.errors import DataError
from spillnet.returns import (
    DailyReturnPanel,
    PricePanel,
    daily_log_returns,
    read_price_csv,
    summary_stats,
    weekly_aggregate,
    write_stats_csv,
)

from conftest import make_panel

WED = dt.date(2010, 1, 6)
THU = dt.date(2010, 1, 7)


def days(*offsets, start=WED):
    return tuple(start + dt.timedelta(days=o) for o in offsets)


def price_panel(dates, values, labels=("x",)):
    return PricePanel(dates=dates, labels=labels, values=np.asarray(values, dtype=float))


class TestDailyLogReturns:
    def test_constant_price_zero_return(self):
        panel = price_panel(days(0, 1), [[100.0], [100.0]])
        out = daily_log_returns(panel)
        assert out.values.shape == (1, 1)
        assert out.values[0, 0] == 0.0

    def test_hand_computed_logs(self):
        panel = price_panel(days(0, 1, 2), [[100.0], [110.0], [99.0]])
        out = daily_log_returns(panel)
        np.testing.assert_allclose(out.values[:, 0], [math.log(1.10), math.log(0.90)], rtol=1e-12)

    def test_forward_fill_over_missing_price(self):
        panel = price_panel(days(0, 1, 2), [[100.0], [np.nan], [121.0]])
        out = daily_log_returns(panel)
        # holiday carries the last price, so its return is zero and the gap
        # return lands on the next trading day
        assert out.values[0, 0] == 0.0
        np.testing.assert_allclose(out.values[1, 0], math.log(1.21), rtol=1e-15)

    def test_leading_missing_stays_missing(self):
        panel = price_panel(days(0, 1, 2), [[np.nan], [100.0], [110.0]])
        out = daily_log_returns(panel)
        assert np.isnan(out.values[0, 0])
        np.testing.assert_allclose(out.values[1, 0], math.log(1.10))

    def test_too_few_prices_rejected(self):
        with pytest.raises(DataError, match="at least 2"):
            price_panel(days(0, 1), [[100.0], [np.nan]])

    def test_nonpositive_price_rejected(self):
        with pytest.raises(DataError, match="positive"):
            price_panel(days(0, 1), [[100.0], [-1.0]])


def daily_returns(dates, values, labels=("x",)):
    return DailyReturnPanel(dates=dates, labels=labels, values=np.asarray(values, dtype=float))


class TestWeeklyAggregate:
    def test_five_days_sum(self):
        # Thu..Wed window fully covered: Thu, Fri, Mon, Tue, Wed
        dates = days(0, 1, 4, 5, 6, start=THU)
        out = weekly_aggregate(daily_returns(dates, [[0.01]] * 5))
        assert out.values.shape == (1, 1)
        np.testing.assert_allclose(out.values[0, 0], 0.05, atol=1e-12)
        assert out.dates[0].weekday() == 2

    def test_holiday_week_sums_available_days(self):
        # week 1 trades Thu, Fri, Mon only; week 2 is complete
        offs = (0, 1, 4) + (7, 8, 11, 12, 13)
        rets = [[0.01], [0.02], [0.03]] + [[0.001]] * 5
        out = weekly_aggregate(daily_returns(days(*offs, start=THU), rets))
        assert out.values.shape == (2, 1)
        np.testing.assert_allclose(out.values[0, 0], 0.06, atol=1e-12)

    def test_two_full_weeks_two_rows(self):
        offs = tuple(range(0, 2)) + tuple(range(4, 9)) + tuple(range(11, 14))
        out = weekly_aggregate(daily_returns(days(*offs, start=THU), [[0.01]] * 10))
        assert out.values.shape == (2, 1)

    def test_incomplete_edge_weeks_dropped(self):
        # data starts on a Monday: the first Thu..Wed window is incomplete
        monday = dt.date(2010, 1, 4)
        offs = tuple(range(0, 3)) + tuple(range(3, 8))  # Mon..Wed then Thu..Wed week
        dates = [monday + dt.timedelta(days=o) for o in (0, 1, 2, 3, 4, 7, 8, 9)]
        out = weekly_aggregate(daily_returns(tuple(dates), [[0.01]] * 8))
        assert out.values.shape == (1, 1)  # only the second, complete week survives
        np.testing.assert_allclose(out.values[0, 0], 0.05, atol=1e-12)

    def test_week_missing_for_one_series_dropped_panel_wide(self):
        dates = days(0, 1, 4, 5, 6, 7, 8, 11, 12, 13, start=THU)
        values = np.full((10, 2), 0.01)
        values[5:, 0] = 0.01
        values[:5, 1] = np.nan  # series 2 absent for all of week 1
        out = weekly_aggregate(daily_returns(dates, values, labels=("a", "b")))
        assert out.values.shape == (1, 2)

    def test_empty_result_rejected(self):
        monday = dt.date(2010, 1, 4)
        dates = tuple(monday + dt.timedelta(days=o) for o in range(3))
        with pytest.raises(DataError, match="no complete"):
            weekly_aggregate(daily_returns(dates, [[0.01]] * 3))

    def test_additivity_within_week(self, rng):
        # weekly return equals the sum of its daily returns exactly
        offs = (0, 1, 4, 5, 6) + (7, 8, 11, 12, 13)
        values = rng.normal(scale=0.01, size=(10, 3))
        out = weekly_aggregate(daily_returns(days(*offs, start=THU), values, labels=("a", "b", "c")))
        np.testing.assert_allclose(out.values[0], values[:5].sum(axis=0), atol=1e-12)
        np.testing.assert_allclose(out.values[1], values[5:].sum(axis=0), atol=1e-12)

    def test_split_day_invariance(self):
        # splitting one daily return into two sub-returns that sum to it
        # leaves the weekly return unchanged
        r, r1 = 0.0123456789, 0.0045
        base = daily_returns(days(0, 4, 5, 6, start=THU), [[r], [0.01], [0.01], [0.01]])
        split = daily_returns(
            days(0, 1, 4, 5, 6, start=THU), [[r1], [r - r1], [0.01], [0.01], [0.01]]
        )
        a, b = weekly_aggregate(base), weekly_aggregate(split)
        np.testing.assert_allclose(a.values, b.values, atol=1e-12)


class TestSummaryStats:
    def test_annualization_and_moments(self, rng):
        values = rng.normal(loc=0.001, scale=0.02, size=(300, 2))
        stats = summary_stats(make_panel(values))
        np.testing.assert_allclose(stats.mean, 100 * 52 * values.mean(axis=0), rtol=1e-12)
        np.testing.assert_allclose(
            stats.std, 100 * np.sqrt(52) * values.std(axis=0, ddof=1), rtol=1e-12
        )
        np.testing.assert_allclose(stats.info, stats.mean / stats.std, rtol=1e-12)

    def test_constant_series_degenerate(self):
        c = 0.003
        values = np.column_stack([np.full(10, c), np.arange(10) * 1e-3])
        stats = summary_stats(make_panel(values))
        np.testing.assert_allclose(stats.mean[0], 5200 * c, rtol=1e-12)
        assert stats.std[0] == 0.0
        assert np.isnan(stats.info[0]) and np.isnan(stats.skew[0]) and np.isnan(stats.kurt[0])
        assert np.isfinite(stats.info[1])

    def test_standard_normal_monte_carlo(self):
        # skewness and raw kurtosis of standard normal draws land within
        # three standard errors of 0 and 3
        t = 100_000
        draws = np.random.default_rng(7).normal(size=(t, 1))
        stats = summary_stats(make_panel(draws))
        assert abs(stats.skew[0]) < 3 * np.sqrt(6.0 / t)
        assert abs(stats.kurt[0] - 3.0) < 3 * np.sqrt(24.0 / t)

    def test_permutation_invariance(self, rng):
        values = rng.normal(size=(60, 2))
        base = summary_stats(make_panel(values))
        perm = summary_stats(make_panel(values[rng.permutation(60)]))
        for field in ("mean", "std", "info", "skew", "kurt"):
            np.testing.assert_allclose(getattr(base, field), getattr(perm, field), rtol=1e-12)

    def test_too_short_rejected(self):
        with pytest.raises(DataError, match="at least 4"):
            summary_stats(make_panel(np.zeros((3, 1))))


class TestCsvRoundTrip:
    def test_price_csv_reader(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("date,aa,bb\n2010-01-06,100,\n2010-01-07,101,50\n2010-01-08,102,51\n")
        panel = read_price_csv(path)
        assert panel.labels == ("aa", "bb")
        assert np.isnan(panel.values[0, 1])
        assert panel.values[2, 0] == 102.0

    def test_bad_date_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("date,aa\nnot-a-date,100\n2010-01-07,101\n")
        with pytest.raises(DataError, match="bad date"):
            read_price_csv(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("timestamp,aa\n2010-01-06,100\n")
        with pytest.raises(DataError, match="first column"):
            read_price_csv(path)

    def test_stats_csv_schema(self, tmp_path, rng):
        stats = summary_stats(make_panel(rng.normal(size=(50, 2)), labels=("u", "v")))
        path = tmp_path / "stats.csv"
        write_stats_csv(stats, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "label,mean,std,info,skew,kurt"
        assert len(lines) == 3
        cells = lines[1].split(",")
        assert cells[0] == "u"
        assert float(cells[1]) == pytest.approx(stats.mean[0], rel=1e-5)
