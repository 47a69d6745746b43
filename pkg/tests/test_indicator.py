"""src/indicator.py の国別・全体指標の合成を検証するテスト。"""

from __future__ import annotations

import unittest
from datetime import date, timedelta

import numpy as np

from src.errors import ConfigurationError, DomainError
from src.indicator import (
    IndicatorSet,
    MixWeights,
    build_indicator_set,
    cap_weights,
    ivrvsri_country,
    ivrvsri_global,
    weighted_composite,
)
from src.series import TimeSeries
from src.synthetic import DEFAULT_CAPS, DEFAULT_MARKETS, synthetic_markets
from src.volatility import RVParams

MARKETS = ("US", "EU", "JP", "BR")


def dated(values, name: str, unit: str = "percent") -> TimeSeries:
    values = np.asarray(values, dtype=float)
    dates = tuple(date(2019, 1, 1) + timedelta(days=index) for index in range(values.size))
    return TimeSeries(dates, values, name=name, unit=unit)


class CapWeightsTest(unittest.TestCase):
    """時価総額ウェイトの正規化を確認する。"""

    def test_market_cap_shares(self) -> None:
        weights = cap_weights([35.6, 3.7, 5.5, 1.0], MARKETS)

        for expected, actual in zip([77.7, 8.1, 12.0, 2.2], weights.weights):
            self.assertAlmostEqual(actual * 100.0, expected, delta=0.05)
        self.assertAlmostEqual(sum(weights.weights), 1.0, places=15)

    def test_non_positive_cap(self) -> None:
        with self.assertRaises(DomainError):
            cap_weights([1.0, 0.0], ["a", "b"])

    def test_label_mismatch(self) -> None:
        with self.assertRaises(ConfigurationError):
            cap_weights([1.0, 2.0], ["a"])

    def test_weights_ignore_cap_units(self) -> None:
        rng = np.random.default_rng(31)
        for _ in range(50):
            caps = rng.uniform(0.1, 50.0, 4)
            factor = float(rng.uniform(1e-3, 1e6))

            base = cap_weights(caps, MARKETS)
            rescaled = cap_weights(caps * factor, MARKETS)

            np.testing.assert_allclose(rescaled.weights, base.weights, rtol=1e-12, atol=0.0)


class CompositionTest(unittest.TestCase):
    """国別合成と全体合成の関係を確認する。"""

    def test_country_mix(self) -> None:
        iv = dated([20.0, 30.0], "IV_US")
        rv = dated([10.0, 50.0], "RV_US")

        result = ivrvsri_country(iv, rv, MixWeights.from_iv_weight(0.25))

        np.testing.assert_allclose(result.values, [12.5, 45.0])

    def test_unit_mismatch_requires_scale(self) -> None:
        iv = dated([20.0, 30.0], "IV_US", unit="percent")
        rv = dated([0.1, 0.2], "RV_US", unit="decimal")

        with self.assertRaises(ConfigurationError):
            ivrvsri_country(iv, rv, MixWeights())
        scaled = ivrvsri_country(iv, rv, MixWeights(), rv_scale=100.0)
        np.testing.assert_allclose(scaled.values, [15.0, 25.0])

    def test_invalid_mix(self) -> None:
        with self.assertRaises(ConfigurationError):
            MixWeights(w_iv=0.7, w_rv=0.7)

    def test_global_identity_on_random_panels(self) -> None:
        rng = np.random.default_rng(2024)
        for _ in range(100):
            caps = rng.uniform(0.5, 40.0, 4)
            weights = cap_weights(caps, MARKETS)
            mix = MixWeights.from_iv_weight(float(rng.uniform(0.0, 1.0)))
            iv = {market: dated(rng.uniform(5.0, 80.0, 500), f"IV_{market}") for market in MARKETS}
            rv = {market: dated(rng.uniform(5.0, 80.0, 500), f"RV_{market}") for market in MARKETS}
            country = {market: ivrvsri_country(iv[market], rv[market], mix) for market in MARKETS}
            indicators = IndicatorSet(
                markets=MARKETS,
                iv=iv,
                rv=rv,
                country=country,
                ivsri=weighted_composite([iv[market] for market in MARKETS], weights, name="IVSRI"),
                rvsri=weighted_composite([rv[market] for market in MARKETS], weights, name="RVSRI"),
                market_weights=weights,
                mix=mix,
            )

            result = ivrvsri_global(indicators)

            composite = weighted_composite([country[market] for market in MARKETS], weights)
            self.assertLess(float(np.max(np.abs(result.values - composite.values))), 1e-10)

    def test_weighted_composite_propagates_missing(self) -> None:
        weights = cap_weights([1.0, 1.0], ["a", "b"])

        result = weighted_composite([dated([1.0, np.nan], "a"), dated([3.0, 4.0], "b")], weights)

        self.assertEqual(result.values[0], 2.0)
        self.assertTrue(np.isnan(result.values[1]))

    def test_weighted_sum_of_iv_levels(self) -> None:
        weights = cap_weights([77.7, 8.1, 12.0, 2.2], MARKETS)
        levels = [dated([level], f"IV_{market}") for level, market in zip([20.0, 25.0, 22.0, 30.0], MARKETS)]

        result = weighted_composite(levels, weights, name="IVSRI")

        self.assertAlmostEqual(float(result.values[0]), 20.865, delta=1e-10)

    def test_composite_stays_between_inputs(self) -> None:
        rng = np.random.default_rng(32)
        for _ in range(50):
            weights = cap_weights(rng.uniform(0.1, 50.0, 4), MARKETS)
            inputs = [dated(rng.uniform(5.0, 80.0, 200), f"IV_{market}") for market in MARKETS]

            result = weighted_composite(inputs, weights)

            stacked = np.vstack([item.values for item in inputs])
            self.assertTrue(np.all(result.values >= stacked.min(axis=0) - 1e-12))
            self.assertTrue(np.all(result.values <= stacked.max(axis=0) + 1e-12))


class BuildIndicatorSetTest(unittest.TestCase):
    """合成データから指標一式を組み立てる。"""

    def test_columns_and_warmup(self) -> None:
        markets = synthetic_markets(11, n_days=120)

        indicators = build_indicator_set(
            [market.prices for market in markets],
            [market.iv for market in markets],
            [market.cap for market in markets],
            [market.name for market in markets],
            rv_params=RVParams(window=21),
        )

        self.assertEqual(indicators.markets, DEFAULT_MARKETS)
        self.assertEqual(
            list(indicators.columns())[:4],
            [f"IV_{market}" for market in DEFAULT_MARKETS],
        )
        self.assertEqual(list(indicators.columns())[-3:], ["IVSRI", "RVSRI", "IVRVSRI"])
        self.assertTrue(np.all(np.isnan(indicators.ivrvsri.values[:21])))
        self.assertFalse(np.any(np.isnan(indicators.ivrvsri.values[21:])))
        self.assertEqual(indicators.rv["US"].unit, "percent")
        for market, cap in zip(DEFAULT_MARKETS, DEFAULT_CAPS):
            self.assertAlmostEqual(indicators.market_weights.as_dict()[market], cap / sum(DEFAULT_CAPS))

    def test_input_count_mismatch(self) -> None:
        markets = synthetic_markets(11, n_days=60)

        with self.assertRaises(ConfigurationError):
            build_indicator_set(
                [market.prices for market in markets],
                [market.iv for market in markets[:2]],
                [market.cap for market in markets],
                [market.name for market in markets],
            )


if __name__ == "__main__":
    unittest.main()
