"""src/volatility.py の実現ボラティリティとインプライド分散を検証するテスト。"""

from __future__ import annotations

import math
import unittest
from datetime import date, timedelta

import numpy as np

from src.errors import ConfigurationError, DegenerateChainError, DomainError
from src.series import TimeSeries
from src.volatility import OptionChainSlice, RVParams, implied_variance, implied_variance_index, realized_vol, strike_increments


def price_series(values) -> TimeSeries:
    values = np.asarray(values, dtype=float)
    dates = tuple(date(2021, 1, 1) + timedelta(days=index) for index in range(values.size))
    return TimeSeries(dates, values, name="px", unit="level")


class RealizedVolTest(unittest.TestCase):
    """realized_vol の年率化と窓の扱いを確認する。"""

    def test_equal_log_returns(self) -> None:
        prices = price_series(100.0 * np.exp(0.01 * np.arange(22)))

        result = realized_vol(prices, RVParams(window=21, annualization=252.0))

        self.assertTrue(np.all(np.isnan(result.values[:21])))
        self.assertAlmostEqual(result.values[21], 0.158745, delta=1e-6)
        self.assertEqual(result.unit, "decimal")

    def test_constant_prices_have_zero_volatility(self) -> None:
        result = realized_vol(price_series([50.0] * 40))

        np.testing.assert_array_equal(result.values[21:], 0.0)

    def test_scale_invariance(self) -> None:
        rng = np.random.default_rng(42)
        prices = 100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.01, 300)))

        base = realized_vol(price_series(prices))
        scaled = realized_vol(price_series(prices * 37.5))

        np.testing.assert_allclose(scaled.values[21:], base.values[21:], rtol=1e-10)

    def test_value_uses_only_past_window(self) -> None:
        rng = np.random.default_rng(8)
        prices = 100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.01, 60)))
        changed = prices.copy()
        changed[45:] *= 1.5

        original = realized_vol(price_series(prices))
        modified = realized_vol(price_series(changed))

        np.testing.assert_array_equal(original.values[:45], modified.values[:45])

    def test_short_series_is_all_missing(self) -> None:
        result = realized_vol(price_series([1.0, 1.1, 1.2]))

        self.assertTrue(np.all(np.isnan(result.values)))

    def test_non_positive_price(self) -> None:
        with self.assertRaises(DomainError):
            realized_vol(price_series([1.0, -1.0] + [1.0] * 30))

    def test_invalid_window(self) -> None:
        with self.assertRaises(ConfigurationError):
            RVParams(window=1)


class ImpliedVarianceTest(unittest.TestCase):
    """単一満期チェーンからのインプライド分散を確認する。"""

    def test_two_strike_chain(self) -> None:
        chain = OptionChainSlice.from_chain((100.0, 105.0), (2.0, 1.0), expiry_fraction=0.25, risk_free=0.0, forward=100.0)

        self.assertEqual(chain.k0, 0)
        self.assertAlmostEqual(implied_variance_index(chain), 10.783, delta=0.001)

    def test_forward_term_is_subtracted(self) -> None:
        with_forward = OptionChainSlice.from_chain(
            (95.0, 100.0, 105.0), (1.0, 2.0, 1.0), expiry_fraction=0.5, risk_free=0.01, forward=102.0
        )
        at_strike = OptionChainSlice.from_chain(
            (95.0, 100.0, 105.0), (1.0, 2.0, 1.0), expiry_fraction=0.5, risk_free=0.01, forward=100.0
        )

        difference = implied_variance(at_strike) - implied_variance(with_forward)

        self.assertAlmostEqual(difference, (102.0 / 100.0 - 1.0) ** 2 / 0.5, places=12)

    def test_zero_quotes_are_degenerate(self) -> None:
        chain = OptionChainSlice.from_chain((100.0, 105.0), (0.0, 0.0), expiry_fraction=0.25, risk_free=0.0, forward=101.0)

        self.assertLess(implied_variance(chain), 0.0)
        with self.assertRaises(DegenerateChainError):
            implied_variance_index(chain)

    def test_k0_is_largest_strike_below_forward(self) -> None:
        chain = OptionChainSlice.from_chain(
            (90.0, 95.0, 100.0, 105.0), (3.0, 2.0, 1.5, 1.0), expiry_fraction=0.1, risk_free=0.0, forward=99.0
        )

        self.assertEqual(chain.strikes[chain.k0], 95.0)

    def test_forward_below_all_strikes(self) -> None:
        with self.assertRaises(ConfigurationError):
            OptionChainSlice.from_chain((100.0, 105.0), (1.0, 1.0), expiry_fraction=0.25, risk_free=0.0, forward=99.0)

    def test_non_positive_expiry(self) -> None:
        with self.assertRaises(DomainError):
            OptionChainSlice.from_chain((100.0,), (1.0,), expiry_fraction=0.0, risk_free=0.0, forward=100.0)

    def test_strike_increments(self) -> None:
        np.testing.assert_allclose(strike_increments([90.0, 95.0, 105.0, 110.0]), [5.0, 7.5, 7.5, 5.0])
        self.assertTrue(math.isclose(strike_increments([100.0])[0], 0.0))

    def test_single_strike_quote_is_reported(self) -> None:
        chain = OptionChainSlice.from_chain((100.0,), (2.0,), expiry_fraction=0.25, risk_free=0.0, forward=100.0)

        with self.assertLogs("src.volatility", level="WARNING"):
            self.assertEqual(implied_variance(chain), 0.0)

    def test_monotone_in_quotes(self) -> None:
        rng = np.random.default_rng(12)
        strikes = (80.0, 85.0, 90.0, 95.0, 100.0, 105.0, 110.0, 115.0)
        for _ in range(200):
            quotes = rng.uniform(0.5, 5.0, len(strikes))
            bumped = quotes.copy()
            bumped[int(rng.integers(len(strikes)))] += float(rng.uniform(0.0, 2.0))
            base = OptionChainSlice.from_chain(strikes, quotes, expiry_fraction=0.1, risk_free=0.02, forward=101.0)
            higher = OptionChainSlice.from_chain(strikes, bumped, expiry_fraction=0.1, risk_free=0.02, forward=101.0)

            self.assertGreaterEqual(implied_variance_index(higher), implied_variance_index(base))

    def test_doubling_expiry_with_scaled_quotes(self) -> None:
        """Q/T を一定に保って T を2倍にしても行使価格の和の項は変わらない。"""

        strikes = (90.0, 95.0, 100.0, 105.0, 110.0)
        quotes = np.array([0.8, 1.6, 3.0, 1.4, 0.6])
        short = OptionChainSlice.from_chain(strikes, quotes, expiry_fraction=0.1, risk_free=0.0, forward=100.0)
        long = OptionChainSlice.from_chain(strikes, 2.0 * quotes, expiry_fraction=0.2, risk_free=0.0, forward=100.0)

        self.assertLessEqual(abs(implied_variance(long) - implied_variance(short)), 1e-12 * implied_variance(short))


if __name__ == "__main__":
    unittest.main()
