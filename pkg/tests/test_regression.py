"""src/regression.py の計画行列、OLS、擬似分位点 OLS、分位点回帰を検証するテスト。"""

from __future__ import annotations

import itertools
import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.errors import (
    ConfigurationError,
    DomainError,
    InsufficientDataError,
    NestingViolationError,
    OutputError,
    SingularDesignError,
)
from src.models import RegressionConfig
from src.regression import (
    LaggedDesign,
    adjusted_r2,
    build_design,
    ols,
    parse_threshold,
    pinball_loss,
    predictor_sets,
    pseudo_r2,
    quantile_regression,
    quasi_quantile_ols,
    restricted_objective,
    run_battery,
)
from src.series import TimeSeries
from src.synthetic import business_dates, level_series, regime_switching_returns
from src.utils import round_significant, save_json


def series(values, name: str) -> TimeSeries:
    values = np.asarray(values, dtype=float)
    return TimeSeries(business_dates(values.size), values, name=name)


def direct_design(X: np.ndarray, y: np.ndarray, labels: tuple[str, ...] | None = None) -> LaggedDesign:
    """ラグ構造を持たない計画行列をそのまま包む。"""

    labels = labels or ("const", *(f"x{index}" for index in range(1, X.shape[1])))
    return LaggedDesign(
        y=np.asarray(y, dtype=float),
        X=np.asarray(X, dtype=float),
        lags=1,
        row_dates=tuple(range(len(y))),
        predictor_labels=tuple(labels[1:]),
        column_labels=labels,
        rows_before_filter=len(y),
    )


def line_design(x: np.ndarray, y: np.ndarray) -> LaggedDesign:
    return direct_design(np.column_stack([np.ones(x.size), x]), y)


class BuildDesignTest(unittest.TestCase):
    """ラグ付き計画行列の形と欠損行の扱いを確認する。"""

    def test_columns_and_rows(self) -> None:
        rng = np.random.default_rng(1)
        y = series(rng.standard_normal(40), "y")
        a = series(rng.standard_normal(40), "a")
        b = series(rng.standard_normal(40), "b")

        design = build_design(y, [a, b], 2)

        self.assertEqual(design.column_labels, ("const", "a_L1", "a_L2", "b_L1", "b_L2"))
        self.assertEqual(design.n_rows, 38)
        self.assertEqual(design.X[0, 1], a.values[1])
        self.assertEqual(design.X[0, 2], a.values[0])
        self.assertEqual(design.y[0], y.values[2])

    def test_rows_with_missing_lags_are_dropped(self) -> None:
        rng = np.random.default_rng(2)
        values = rng.standard_normal(40)
        values[10] = np.nan
        y = series(rng.standard_normal(40), "y")

        design = build_design(y, [series(values, "a")], 2)

        self.assertEqual(design.n_rows, 36)
        self.assertEqual(design.rows_before_filter, 38)
        dropped = design.dropped_rows("evaluate")
        self.assertEqual([row.date for row in dropped], [str(y.dates[11]), str(y.dates[12])])
        self.assertIn("a_L1", dropped[0].reason)

    def test_too_few_rows(self) -> None:
        rng = np.random.default_rng(3)
        y = series(rng.standard_normal(30), "y")
        predictors = [series(rng.standard_normal(30), f"x{index}") for index in range(5)]

        with self.assertRaises(InsufficientDataError):
            build_design(y, predictors, 5)

    def test_mismatched_dates(self) -> None:
        y = series(np.arange(10.0), "y")
        other = TimeSeries(business_dates(11)[1:], np.arange(10.0), name="x")

        with self.assertRaises(ConfigurationError):
            build_design(y, [other], 1)


class OlsTest(unittest.TestCase):
    """OLS と自由度調整済み R² を確認する。"""

    def test_adjusted_r2_values(self) -> None:
        self.assertAlmostEqual(adjusted_r2(0.5, 100, 1), 0.494898, places=6)
        self.assertAlmostEqual(adjusted_r2(0.01, 51, 3), -0.053191, places=6)
        self.assertAlmostEqual(adjusted_r2(0.0, 100, 5), 1.0 - 99.0 / 94.0, places=12)
        self.assertAlmostEqual(adjusted_r2(0.0, 100, 5), -0.0531914894, places=9)
        self.assertEqual(adjusted_r2(1.0, 100, 5), 1.0)
        with self.assertRaises(DomainError):
            adjusted_r2(0.5, 3, 2)

    def test_exact_fit(self) -> None:
        x = np.arange(1.0, 11.0)

        report = ols(line_design(x, 2.0 * x))

        self.assertAlmostEqual(report.coefficients["const"], 0.0, places=10)
        self.assertAlmostEqual(report.coefficients["x1"], 2.0, places=10)
        self.assertAlmostEqual(report.r2, 1.0, places=12)
        self.assertAlmostEqual(report.fit, 1.0, places=12)

    def test_matches_normal_equations(self) -> None:
        rng = np.random.default_rng(10)
        for _ in range(20):
            X = np.column_stack([np.ones(10), rng.standard_normal((10, 2))])
            y = rng.standard_normal(10)

            report = ols(direct_design(X, y))

            expected = np.linalg.solve(X.T @ X, X.T @ y)
            np.testing.assert_allclose(list(report.coefficients.values()), expected, atol=1e-10)

    def test_residuals_are_orthogonal(self) -> None:
        rng = np.random.default_rng(12)
        X = np.column_stack([np.ones(200), rng.standard_normal((200, 3))])
        y = X @ np.array([0.1, 1.0, -2.0, 0.5]) + rng.standard_normal(200)

        report = ols(direct_design(X, y))

        residuals = y - X @ np.array(list(report.coefficients.values()))
        scale = np.max(np.abs(X)) * np.max(np.abs(y))
        self.assertLess(np.max(np.abs(X.T @ residuals)) / (200 * scale), 1e-8)

    def test_singular_design_names_columns(self) -> None:
        rng = np.random.default_rng(13)
        y = series(rng.standard_normal(50), "y")
        x = rng.standard_normal(50)

        design = build_design(y, [series(x, "a"), series(x, "b")], 1)

        with self.assertRaises(SingularDesignError) as context:
            ols(design)
        self.assertTrue(set(context.exception.collinear_columns) & {"a_L1", "b_L1"})


class QuasiQuantileTest(unittest.TestCase):
    """閾値で行を絞り込む OLS を確認する。"""

    def test_parse_threshold(self) -> None:
        self.assertEqual(parse_threshold("P25"), 0.25)
        self.assertEqual(parse_threshold("P05"), 0.05)
        self.assertEqual(parse_threshold("P025"), 0.025)
        self.assertEqual(parse_threshold("P01"), 0.01)
        self.assertIsNone(parse_threshold("mean"))
        with self.assertRaises(ConfigurationError):
            parse_threshold("P0")
        with self.assertRaises(ConfigurationError):
            parse_threshold("Q5")

    def test_infinite_threshold_matches_ols(self) -> None:
        rng = np.random.default_rng(20)
        X = np.column_stack([np.ones(100), rng.standard_normal((100, 2))])
        design = direct_design(X, rng.standard_normal(100))

        base = ols(design)
        quasi = quasi_quantile_ols(design, "inf")

        self.assertEqual(quasi.coefficients, base.coefficients)
        self.assertEqual(quasi.fit, base.fit)
        self.assertEqual(quasi.model_kind, "quasi_quantile")

    def test_quantile_threshold_keeps_lower_rows(self) -> None:
        rng = np.random.default_rng(21)
        x = rng.standard_normal(1000)
        design = line_design(x, rng.standard_normal(1000))

        report = quasi_quantile_ols(design, "P10")

        self.assertEqual(report.rows_after_filter, 100)
        self.assertEqual(report.rows_before_filter, 1000)
        self.assertAlmostEqual(report.threshold_value, float(np.quantile(design.y, 0.1)))

    def test_threshold_below_minimum(self) -> None:
        rng = np.random.default_rng(22)
        design = line_design(rng.standard_normal(50), rng.standard_normal(50))

        with self.assertRaises(InsufficientDataError):
            quasi_quantile_ols(design, float(np.min(design.y)) - 1.0)


def brute_force_line_objective(x: np.ndarray, y: np.ndarray, tau: float) -> float:
    """2点を通る全ての直線のピンボール損失の最小値。"""

    best = np.inf
    for i, j in itertools.combinations(range(x.size), 2):
        if x[i] == x[j]:
            continue
        slope = (y[j] - y[i]) / (x[j] - x[i])
        intercept = y[i] - slope * x[i]
        best = min(best, pinball_loss(y - intercept - slope * x, tau))
    return best


class QuantileRegressionTest(unittest.TestCase):
    """ピンボール損失の最小化と擬似 R² を確認する。"""

    def test_pseudo_r2_values(self) -> None:
        self.assertEqual(pseudo_r2(2.0, 2.0), 0.0)
        self.assertEqual(pseudo_r2(0.0, 2.0), 1.0)
        self.assertEqual(pseudo_r2(1.5, 2.0), 0.25)
        with self.assertRaises(DomainError):
            pseudo_r2(0.0, 0.0)
        with self.assertRaises(NestingViolationError):
            pseudo_r2(3.0, 2.0)

    def test_pinball_loss(self) -> None:
        self.assertAlmostEqual(pinball_loss(np.array([1.0, -2.0]), 0.25), 0.25 + 1.5)

    def test_restricted_objective_matches_scan(self) -> None:
        rng = np.random.default_rng(30)
        for tau in (0.01, 0.1, 0.25, 0.5, 0.9):
            y = rng.standard_normal(57)

            scanned = min(pinball_loss(y - candidate, tau) for candidate in y)

            self.assertAlmostEqual(restricted_objective(y, tau), scanned, places=12)

    def test_intercept_only_midpoint(self) -> None:
        y = np.array([1.0, 2.0, 3.0, 4.0])
        design = direct_design(np.ones((4, 1)), y, labels=("const",))

        midpoint = quantile_regression(design, 0.25, tie_break="midpoint")
        vertex = quantile_regression(design, 0.25, tie_break="vertex")

        self.assertAlmostEqual(midpoint.coefficients["const"], 1.5, places=8)
        self.assertGreaterEqual(vertex.coefficients["const"], 1.0 - 1e-9)
        self.assertLessEqual(vertex.coefficients["const"], 2.0 + 1e-9)
        self.assertAlmostEqual(midpoint.objective, 1.5, places=10)
        self.assertAlmostEqual(vertex.objective, 1.5, places=10)
        self.assertEqual(midpoint.fit, 0.0)

    def test_matches_enumerated_lines(self) -> None:
        rng = np.random.default_rng(40)
        for trial in range(200):
            n = int(rng.integers(5, 31))
            tau = float(rng.choice([0.05, 0.1, 0.25, 0.5, 0.75]))
            x = rng.standard_normal(n)
            y = 0.5 * x + rng.standard_t(3, n)

            report = quantile_regression(line_design(x, y), tau, tie_break="vertex")

            expected = brute_force_line_objective(x, y, tau)
            self.assertLessEqual(abs(report.objective - expected), 1e-9 * max(expected, 1.0), msg=f"trial={trial}")

    def test_exact_line_is_recovered_despite_outliers(self) -> None:
        x = np.linspace(-1.0, 1.0, 101)
        noise = np.zeros(101)
        noise[::5] = np.tile([5.0, -3.0], 11)[:21]
        y = 1.0 + 2.0 * x + noise

        for tie_break in ("midpoint", "vertex"):
            report = quantile_regression(line_design(x, y), 0.5, tie_break=tie_break)

            self.assertAlmostEqual(report.coefficients["const"], 1.0, places=6)
            self.assertAlmostEqual(report.coefficients["x1"], 2.0, places=6)
            self.assertAlmostEqual(report.objective, 0.5 * float(np.abs(noise).sum()), places=6)

    def test_tied_optimum_reaches_minimal_objective(self) -> None:
        x = np.linspace(-1.0, 1.0, 101)
        noise = np.tile([-0.3, 0.3], 51)[:101]
        noise[50] = 0.0
        y = 1.0 + 2.0 * x + noise

        report = quantile_regression(line_design(x, y), 0.5)

        reference = pinball_loss(y - 1.0 - 2.0 * x, 0.5)
        self.assertAlmostEqual(reference, 15.0, places=9)
        self.assertLessEqual(abs(report.objective - reference), 1e-9 * reference)
        fitted = report.coefficients["const"] + report.coefficients["x1"] * x
        self.assertAlmostEqual(pinball_loss(y - fitted, 0.5), report.objective, places=9)
        self.assertLessEqual(abs(report.objective - brute_force_line_objective(x, y, 0.5)), 1e-9 * reference)

    def test_subgradient_optimality(self) -> None:
        rng = np.random.default_rng(50)
        X = np.column_stack([np.ones(150), rng.standard_normal((150, 2))])
        y = X @ np.array([0.2, -0.5, 1.0]) + rng.standard_normal(150)
        design = direct_design(X, y)

        report = quantile_regression(design, 0.1)

        beta = np.array(list(report.coefficients.values()))
        base = pinball_loss(y - X @ beta, 0.1)
        for column in range(3):
            for step in (1e-6, -1e-6):
                moved = beta.copy()
                moved[column] += step
                self.assertGreaterEqual(pinball_loss(y - X @ moved, 0.1), base - 1e-10)

    def test_equivariance(self) -> None:
        rng = np.random.default_rng(60)
        x = rng.standard_normal(200)
        y = 0.3 * x + rng.standard_normal(200)

        base = quantile_regression(line_design(x, y), 0.25)
        scaled = quantile_regression(line_design(x, 3.0 * y + 5.0), 0.25)

        self.assertAlmostEqual(scaled.coefficients["x1"], 3.0 * base.coefficients["x1"], places=7)
        self.assertAlmostEqual(scaled.coefficients["const"], 3.0 * base.coefficients["const"] + 5.0, places=7)
        self.assertAlmostEqual(scaled.fit, base.fit, places=7)

    def test_nested_models_do_not_lose_fit(self) -> None:
        rng = np.random.default_rng(70)
        for _ in range(100):
            n = 80
            x1 = rng.standard_normal(n)
            x2 = rng.standard_normal(n)
            y = 0.4 * x1 + rng.standard_normal(n)
            tau = float(rng.choice([0.1, 0.5, 0.9]))

            small = quantile_regression(line_design(x1, y), tau)
            large = quantile_regression(direct_design(np.column_stack([np.ones(n), x1, x2]), y), tau)

            self.assertLessEqual(large.objective, small.objective + 1e-9 * max(small.objective, 1.0))
            self.assertGreaterEqual(large.fit, small.fit - 1e-9)
            self.assertGreaterEqual(small.fit, 0.0)
            self.assertLessEqual(small.fit, 1.0)

    def test_invalid_tau(self) -> None:
        design = line_design(np.arange(10.0), np.arange(10.0))

        with self.assertRaises(DomainError):
            quantile_regression(design, 1.0)

    def test_lower_tail_predictability(self) -> None:
        wins = 0
        for seed in range(100):
            y, x = regime_switching_returns(seed)
            design = build_design(series(y, "y"), [series(x, "x")], 1)

            lower = quantile_regression(design, 0.01)
            median = quantile_regression(design, 0.5)

            if lower.fit > median.fit:
                wins += 1

        self.assertGreaterEqual(wins, 90)


class BatteryTest(unittest.TestCase):
    """回帰バッテリー全体の組み合わせを確認する。"""

    def test_predictor_sets(self) -> None:
        self.assertEqual(predictor_sets(["a"]), [("a", ("a",))])
        self.assertEqual(predictor_sets(["a", "b"])[-1], ("joint", ("a", "b")))

    def test_entries_cover_every_combination(self) -> None:
        dates = business_dates(300)
        target = level_series(1, dates, "US")
        predictors = {"ivrvsri": level_series(2, dates, "x", start=20.0), "ciss": level_series(3, dates, "y", start=0.3)}
        config = RegressionConfig(lags=2, horizon=5, thresholds=["inf", "mean", "P10"], taus=[0.5, 0.1], overlap="both")

        result = run_battery(target, predictors, config)

        entries = result.document.entries
        self.assertEqual(len(entries), 3 * 2 * 6 * 2)
        self.assertEqual(result.document.schema_version, 1)
        for overlap in ("overlap", "nonoverlap"):
            ols_entry = entries[f"ols|joint|2|all|{overlap}"]
            quasi_entry = entries[f"quasi_quantile|joint|2|inf|{overlap}"]
            self.assertEqual(ols_entry.status, "ok")
            self.assertEqual(ols_entry.fit, quasi_entry.fit)
            self.assertIn("ivrvsri_L2", ols_entry.coefficients)
            self.assertEqual(entries[f"quantile|ciss|1|0.1|{overlap}"].fit_kind, "pseudo_r2")
        self.assertEqual(result.row_counts["returns_overlap"], 295)
        self.assertEqual(result.row_counts["returns_nonoverlap"], 59)

    def test_short_sample_records_insufficient_data(self) -> None:
        dates = business_dates(20)
        config = RegressionConfig(lags=1, horizon=5, thresholds=["mean"], taus=[0.5], overlap="off")

        result = run_battery(level_series(1, dates, "US"), {"ivrvsri": level_series(2, dates, "x")}, config)

        statuses = {entry.status for entry in result.document.entries.values()}
        self.assertEqual(statuses, {"insufficient_data"})
        self.assertEqual(len(result.document.entries), 3)

    def test_infinite_threshold_is_written_as_null(self) -> None:
        dates = business_dates(200)
        config = RegressionConfig(lags=1, horizon=5, thresholds=["inf", "mean"], taus=[0.5], overlap="off")

        result = run_battery(level_series(1, dates, "US"), {"ivrvsri": level_series(2, dates, "x", start=20.0)}, config)

        entries = result.document.entries
        self.assertIsNone(entries["quasi_quantile|ivrvsri|1|inf|nonoverlap"].threshold_value)
        self.assertIsNotNone(entries["quasi_quantile|ivrvsri|1|mean|nonoverlap"].threshold_value)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_json(Path(tmp) / "battery.json", result.document.model_dump(mode="json"))
            loaded = json.loads(path.read_text(encoding="utf-8"))
        self.assertIsNone(loaded["entries"]["quasi_quantile|ivrvsri|1|inf|nonoverlap"]["threshold_value"])

    def test_non_finite_json_is_rejected(self) -> None:
        self.assertIsNone(round_significant(float("inf")))
        self.assertIsNone(round_significant(float("-inf")))
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(OutputError):
                save_json(Path(tmp) / "bad.json", {"value": float("inf")})


if __name__ == "__main__":
    unittest.main()
