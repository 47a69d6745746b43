"""src/series.py の時系列容器と統計計算を検証するテスト。"""

from __future__ import annotations

import math
import unittest
from datetime import date, timedelta

import numpy as np

from src.errors import ConfigurationError, DomainError, InsufficientHistoryError, InsufficientOverlapError
from src.series import (
    ReturnKind,
    TimeSeries,
    align,
    compute_returns,
    correlation_matrix,
    describe,
    drawdown,
    pearson,
    rolling_correlation,
)


def make_dates(count: int, start: date = date(2020, 1, 1)) -> tuple[date, ...]:
    return tuple(start + timedelta(days=index) for index in range(count))


def make_series(values, name: str = "x", start: date = date(2020, 1, 1)) -> TimeSeries:
    values = list(values)
    return TimeSeries(make_dates(len(values), start), np.asarray(values, dtype=float), name=name)


class TimeSeriesTest(unittest.TestCase):
    """TimeSeries の不変条件を確認する。"""

    def test_rejects_non_increasing_dates(self) -> None:
        with self.assertRaises(ConfigurationError):
            TimeSeries((date(2020, 1, 2), date(2020, 1, 1)), np.array([1.0, 2.0]), name="bad")

    def test_rejects_length_mismatch(self) -> None:
        with self.assertRaises(ConfigurationError):
            TimeSeries(make_dates(3), np.array([1.0, 2.0]), name="bad")

    def test_missing_is_distinct_from_zero(self) -> None:
        series = make_series([0.0, math.nan, 1.0])

        self.assertEqual(series.missing.tolist(), [False, True, False])
        self.assertEqual(series.value_at(date(2020, 1, 1)), 0.0)
        self.assertIsNone(series.value_at(date(2020, 1, 2)))

    def test_values_are_read_only(self) -> None:
        series = make_series([1.0, 2.0])

        with self.assertRaises(ValueError):
            series.values[0] = 5.0

    def test_shifted_moves_values_forward(self) -> None:
        shifted = make_series([1.0, 2.0, 3.0]).shifted(1)

        self.assertTrue(math.isnan(shifted.values[0]))
        self.assertEqual(shifted.values[1:].tolist(), [1.0, 2.0])


class ReturnsTest(unittest.TestCase):
    """compute_returns の定義を確認する。"""

    def test_log_and_simple_returns(self) -> None:
        prices = make_series([100.0, 110.0, 99.0])

        log_returns = compute_returns(prices, ReturnKind.LOG, 1)
        simple_returns = compute_returns(prices, "simple", 1)

        self.assertAlmostEqual(log_returns.values[0], math.log(1.1), places=15)
        self.assertAlmostEqual(simple_returns.values[1], 99.0 / 110.0 - 1.0, places=15)
        self.assertEqual(log_returns.dates, prices.dates[1:])

    def test_non_overlapping_horizon_samples_every_h_steps(self) -> None:
        prices = make_series(np.arange(1.0, 13.0))

        returns = compute_returns(prices, ReturnKind.SIMPLE, horizon=5, overlap=False)

        self.assertEqual(returns.source_positions, (5, 10))
        self.assertAlmostEqual(returns.values[0], 6.0 / 1.0 - 1.0)
        self.assertAlmostEqual(returns.values[1], 11.0 / 6.0 - 1.0)

    def test_overlapping_horizon_returns_every_day(self) -> None:
        prices = make_series(np.arange(1.0, 13.0))

        returns = compute_returns(prices, ReturnKind.SIMPLE, horizon=5, overlap=True)

        self.assertEqual(len(returns), 7)

    def test_missing_endpoint_gives_missing_return(self) -> None:
        returns = compute_returns(make_series([1.0, math.nan, 2.0, 3.0]), ReturnKind.LOG, 1)

        self.assertTrue(math.isnan(returns.values[0]))
        self.assertTrue(math.isnan(returns.values[1]))
        self.assertAlmostEqual(returns.values[2], math.log(1.5))

    def test_log_returns_rebuild_price_levels(self) -> None:
        rng = np.random.default_rng(41)
        prices = make_series(100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.02, 250))))

        returns = compute_returns(prices, ReturnKind.LOG, 1)

        rebuilt = prices.values[0] * np.exp(np.cumsum(returns.values))
        np.testing.assert_allclose(rebuilt, prices.values[1:], rtol=1e-12, atol=0.0)

    def test_insufficient_history(self) -> None:
        with self.assertRaises(InsufficientHistoryError):
            compute_returns(make_series([1.0, 2.0]), ReturnKind.LOG, horizon=2)

    def test_non_positive_price_is_domain_error(self) -> None:
        with self.assertRaises(DomainError) as context:
            compute_returns(make_series([1.0, 0.0, 2.0]), ReturnKind.LOG, 1)

        self.assertIn("2020-01-02", str(context.exception))


class DrawdownTest(unittest.TestCase):
    """drawdown の値域と定義を確認する。"""

    def test_drawdown_from_running_maximum(self) -> None:
        result = drawdown(make_series([100.0, 120.0, 90.0, 130.0]))

        np.testing.assert_allclose(result.values, [0.0, 0.0, 90.0 / 120.0 - 1.0, 0.0])

    def test_drawdown_is_never_positive(self) -> None:
        rng = np.random.default_rng(3)
        prices = make_series(100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.02, 500))))

        result = drawdown(prices)

        self.assertTrue(np.all(result.values <= 0.0))
        self.assertTrue(np.all(result.values > -1.0))


class DescribeTest(unittest.TestCase):
    """記述統計と Jarque-Bera 検定を確認する。"""

    def test_known_sample(self) -> None:
        summary = describe(make_series([1.0, 2.0, 3.0, 4.0, 5.0, math.nan]))

        self.assertEqual(summary.nobs, 5)
        self.assertEqual(summary.n_missing, 1)
        self.assertEqual((summary.min, summary.q1, summary.median, summary.q3, summary.max), (1.0, 2.0, 3.0, 4.0, 5.0))
        self.assertAlmostEqual(summary.mean, 3.0)
        self.assertAlmostEqual(summary.stdev, math.sqrt(2.5))
        self.assertAlmostEqual(summary.skewness, 0.0)
        self.assertAlmostEqual(summary.kurtosis, -1.3)
        self.assertAlmostEqual(summary.jb_stat, 5.0 / 6.0 * (1.3**2 / 4.0))

    def test_small_sample_leaves_moments_missing(self) -> None:
        summary = describe(make_series([1.0, 2.0, 3.0]))

        self.assertIsNone(summary.skewness)
        self.assertIsNone(summary.jb_pvalue)

    def test_constant_sample_leaves_moments_missing(self) -> None:
        summary = describe(make_series([2.0] * 10))

        self.assertEqual(summary.stdev, 0.0)
        self.assertIsNone(summary.kurtosis)

    def test_jarque_bera_size_on_normal_samples(self) -> None:
        rng = np.random.default_rng(20240101)
        rejections = 0
        trials = 1000
        for _ in range(trials):
            summary = describe(make_series(rng.standard_normal(500)))
            if summary.jb_pvalue < 0.05:
                rejections += 1

        self.assertGreater(rejections / trials, 0.02)
        self.assertLess(rejections / trials, 0.08)


class AlignAndCorrelationTest(unittest.TestCase):
    """日付の整列と相関を確認する。"""

    def test_intersect_and_union(self) -> None:
        left = make_series([1.0, 2.0, 3.0], name="left")
        right = make_series([10.0, 20.0, 30.0], name="right", start=date(2020, 1, 2))

        intersect = align([left, right], "intersect")
        union = align([left, right], "union")

        self.assertEqual(len(intersect[0]), 2)
        self.assertEqual(intersect[1].values.tolist(), [10.0, 20.0])
        self.assertEqual(len(union[0]), 4)
        self.assertTrue(math.isnan(union[1].values[0]))

    def test_disjoint_series_raise(self) -> None:
        left = make_series([1.0, 2.0], name="left")
        right = make_series([1.0, 2.0], name="right", start=date(2021, 1, 1))

        with self.assertRaises(InsufficientOverlapError):
            align([left, right], "intersect")

    def test_pearson_needs_three_pairs(self) -> None:
        self.assertIsNone(pearson(np.array([1.0, 2.0]), np.array([2.0, 4.0])))
        self.assertAlmostEqual(pearson(np.array([1.0, 2.0, 3.0]), np.array([2.0, 4.0, 7.0])), 0.9933992677987827)

    def test_pearson_ignores_affine_maps(self) -> None:
        rng = np.random.default_rng(42)
        for _ in range(100):
            x = rng.standard_normal(60)
            y = 0.4 * x + rng.standard_normal(60)
            a, c = rng.uniform(0.1, 10.0, 2) * rng.choice([-1.0, 1.0], 2)
            b, d = rng.uniform(-50.0, 50.0, 2)

            expected = float(np.sign(a * c)) * pearson(x, y)
            self.assertAlmostEqual(pearson(a * x + b, c * y + d), expected, delta=1e-12)

    def test_correlation_matrix_is_symmetric_with_unit_diagonal(self) -> None:
        rng = np.random.default_rng(11)
        panel = [make_series(rng.standard_normal(200), name=name) for name in ("a", "b", "c")]

        matrix = correlation_matrix(panel, lag=0)

        for row in matrix.labels:
            self.assertEqual(matrix.entry(row, row), 1.0)
            for column in matrix.labels:
                self.assertEqual(matrix.entry(row, column), matrix.entry(column, row))
                self.assertLessEqual(abs(matrix.entry(row, column)), 1.0)

    def test_lagged_correlation_detects_lead(self) -> None:
        rng = np.random.default_rng(5)
        leader = rng.standard_normal(300)
        follower = np.concatenate([np.zeros(5), leader[:-5]])
        panel = [make_series(follower, name="follower"), make_series(leader, name="leader")]

        matrix = correlation_matrix(panel, lag=5)

        self.assertAlmostEqual(matrix.entry("follower", "leader"), 1.0, places=12)

    def test_rolling_correlation(self) -> None:
        x = make_series(np.arange(10.0), name="x")
        y = make_series(2.0 * np.arange(10.0) + 1.0, name="y")

        result = rolling_correlation(x, y, window=4)

        self.assertTrue(np.all(np.isnan(result.values[:3])))
        np.testing.assert_allclose(result.values[3:], 1.0)
        with self.assertRaises(ConfigurationError):
            rolling_correlation(x, y, window=2)


if __name__ == "__main__":
    unittest.main()
