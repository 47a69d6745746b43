"""各段のスクリプトが共有する入力の読み込みと指標計算のキャッシュ。"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from src.config import check_input_paths
from src.indicator import IndicatorSet, MixWeights, build_indicator_set
from src.ingest import read_series
from src.models import DroppedRow, EngineConfig
from src.series import TimeSeries
from src.volatility import RVParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MarketInputs:
    """1市場分の価格と IV 指数。"""

    name: str
    cap: float
    prices: TimeSeries
    iv: TimeSeries


@dataclass
class StageContext:
    """1回の実行の中で入力と計算済み指標を共有し、行数と除外行を記録する。"""

    config: EngineConfig
    row_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    dropped_rows: list[DroppedRow] = field(default_factory=list)
    _markets: list[MarketInputs] | None = field(default=None, repr=False)
    _indicators: dict[int, IndicatorSet] = field(default_factory=dict, repr=False)
    _benchmarks: dict[str, TimeSeries] | None = field(default=None, repr=False)

    def record_counts(self, stage: str, counts: dict[str, int]) -> None:
        self.row_counts.setdefault(stage, {}).update(counts)

    def markets(self) -> list[MarketInputs]:
        """市場ごとの価格と IV 指数を読み込む (1回だけ)。"""

        if self._markets is None:
            check_input_paths(self.config)
            loaded: list[MarketInputs] = []
            for market in self.config.markets:
                prices = read_series(market.price_csv, column=market.price_column, name=market.name, unit="level")
                iv = read_series(market.iv_csv, column=market.iv_column, name=market.name, unit=self.config.iv_unit)
                loaded.append(MarketInputs(name=market.name, cap=market.cap, prices=prices, iv=iv))
                self.record_counts(
                    "ingest",
                    {f"{market.name}.price_csv": len(prices), f"{market.name}.iv_csv": len(iv)},
                )
            self._markets = loaded
        return self._markets

    def market(self, name: str) -> MarketInputs:
        for market in self.markets():
            if market.name == name:
                return market
        raise KeyError(name)

    def target_prices(self) -> TimeSeries:
        return self.market(self.config.target_market).prices

    def indicators(self, rv_window: int | None = None) -> IndicatorSet:
        """指定した RV 窓長で指標一式を計算する。既定は設定の rv_window。"""

        window = rv_window or self.config.rv_window
        if window not in self._indicators:
            markets = self.markets()
            indicators = build_indicator_set(
                prices=[market.prices for market in markets],
                ivs=[market.iv for market in markets],
                caps=[market.cap for market in markets],
                markets=[market.name for market in markets],
                mix=MixWeights.from_iv_weight(self.config.w_iv),
                rv_params=RVParams(window=window, annualization=self.config.annualization),
                rv_scale=self.config.rv_scale,
            )
            if window == self.config.rv_window:
                self._record_alignment(markets, indicators)
            self._indicators[window] = indicators
        return self._indicators[window]

    def _record_alignment(self, markets: list[MarketInputs], indicators: IndicatorSet) -> None:
        """共通日付から外れた入力行を除外行として記録する。"""

        common = set(indicators.dates)
        for market in markets:
            for label, series in (("price_csv", market.prices), ("iv_csv", market.iv)):
                for day in series.dates:
                    if day not in common:
                        self.dropped_rows.append(
                            DroppedRow(stage="indicator", date=str(day), reason=f"{market.name}.{label}: 共通日付外")
                        )
        self.record_counts(
            "indicator",
            {"dates": len(indicators.dates), "ivrvsri_defined": indicators.ivrvsri.non_missing_count()},
        )

    def benchmark_levels(self) -> dict[str, TimeSeries]:
        """回帰と統計に使うベンチマーク水準系列を読み込む。"""

        if self._benchmarks is None:
            check_input_paths(self.config)
            levels: dict[str, TimeSeries] = {}
            for name, path in self.config.benchmarks.level_series_paths().items():
                levels[name] = read_series(path, name=name, unit="level")
                self.record_counts("ingest", {f"benchmarks.{name}": len(levels[name])})
            self._benchmarks = levels
        return self._benchmarks

    def sri_levels(self) -> dict[str, TimeSeries]:
        """回帰の説明変数にする指標水準 (IVRVSRI とベンチマーク)。"""

        levels: dict[str, TimeSeries] = {}
        if self.config.regression.include_indicator:
            levels["IVRVSRI"] = self.indicators().ivrvsri
        levels.update(self.benchmark_levels())
        return levels


def stage_dir(out_dir: Path, stage: str) -> Path:
    path = Path(out_dir) / stage
    path.mkdir(parents=True, exist_ok=True)
    return path
