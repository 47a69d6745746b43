"""リターン、ドローダウン、記述統計、相関を計算して CSV に保存する。

引数:
    - --config: エンジン設定 TOML
    - --out: 出力ディレクトリ。省略時は設定の output_dir

入力:
    - 設定の markets[].price_csv / iv_csv
    - 設定の benchmarks.*_csv (水準系列がある場合)

出力:
    - <out>/stats/drawdowns.csv
    - <out>/stats/descriptive_daily.csv
    - <out>/stats/descriptive_weekly.csv
    - <out>/stats/correlation_lag0.csv
    - <out>/stats/correlation_lag<h>.csv
    - <out>/stats/rolling_correlation.csv

主な内容:
    - 各市場指数の日次対数リターンと、指標・対象指数の週次リターンの記述統計と Jarque-Bera 検定
    - 各市場指数のドローダウン
    - 週次リターンの同時点・ラグ付き Pearson 相関行列
    - 各指標と対象指数の週次リターンのローリング相関
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

PROJECT_ROOT = Path(__file__).resolve().parents[3]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.config import load_config
from src.models import CorrelationMatrix, EngineConfig, StatsSummary
from src.pipeline.common import StageContext, stage_dir
from src.series import (
    ReturnKind,
    TimeSeries,
    align,
    compute_returns,
    correlation_matrix,
    describe,
    drawdown,
    rolling_correlation,
)
from src.utils import save_frame

STAGE = "stats"
SUMMARY_COLUMNS = list(StatsSummary.model_fields)
logger = logging.getLogger(__name__)


def summary_frame(summaries: list[StatsSummary]) -> pd.DataFrame:
    return pd.DataFrame([summary.model_dump() for summary in summaries], columns=SUMMARY_COLUMNS)


def correlation_frame(matrix: CorrelationMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(matrix.entries, columns=matrix.labels, dtype=float)
    frame.insert(0, "series", matrix.labels)
    return frame


def dated_frame(series: list[TimeSeries]) -> pd.DataFrame:
    aligned = align(series, "union")
    frame = pd.DataFrame({"date": [day.isoformat() for day in aligned[0].dates]})
    for item in aligned:
        frame[item.name] = item.values
    return frame


def weekly_returns(context: StageContext, overlap: bool) -> list[TimeSeries]:
    """指標と対象指数の週次リターン。対象指数を先頭にし、全系列を共通日付にそろえてから計算する。"""

    settings = context.config.regression
    indicators = context.indicators()
    target = context.target_prices().renamed(context.config.target_market)
    levels = [target, indicators.ivsri, indicators.rvsri, indicators.ivrvsri]
    levels.extend(context.benchmark_levels().values())
    aligned = align(levels, "intersect")
    return [
        compute_returns(series, settings.return_kind, settings.horizon, overlap).base for series in aligned
    ]


def process(config: EngineConfig, out_dir: Path, context: StageContext | None = None) -> list[Path]:
    """統計レポート一式を保存する。"""

    context = context or StageContext(config)
    directory = stage_dir(out_dir, STAGE)
    markets = context.markets()
    outputs: list[Path] = []

    drawdowns = [drawdown(market.prices).renamed(market.name) for market in markets]
    outputs.append(save_frame(directory / "drawdowns.csv", dated_frame(drawdowns)))

    daily = [compute_returns(market.prices, ReturnKind.LOG, 1, True).base for market in markets]
    outputs.append(save_frame(directory / "descriptive_daily.csv", summary_frame([describe(item) for item in daily])))

    overlapping = weekly_returns(context, overlap=True)
    non_overlapping = weekly_returns(context, overlap=False)
    outputs.append(
        save_frame(directory / "descriptive_weekly.csv", summary_frame([describe(item) for item in non_overlapping]))
    )

    lag = config.stats.correlation_lag
    outputs.append(save_frame(directory / "correlation_lag0.csv", correlation_frame(correlation_matrix(overlapping, 0))))
    if lag > 0:
        outputs.append(
            save_frame(directory / f"correlation_lag{lag}.csv", correlation_frame(correlation_matrix(overlapping, lag)))
        )

    target, *indicators = overlapping
    rolling = [
        rolling_correlation(item, target, config.stats.rolling_window).renamed(f"{item.name}~{target.name}")
        for item in indicators
    ]
    outputs.append(save_frame(directory / "rolling_correlation.csv", dated_frame(rolling)))
    context.record_counts(
        STAGE,
        {"daily_returns": len(daily[0]), "weekly_overlap": len(overlapping[0]), "weekly_nonoverlap": len(non_overlapping[0])},
    )
    logger.info("統計レポート保存: dir=%s files=%s", directory, len(outputs))
    return outputs


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="記述統計と相関のレポートを作成する")
    parser.add_argument("--config", type=Path, required=True, help="エンジン設定 TOML")
    parser.add_argument("--out", type=Path, help="出力ディレクトリ。省略時は設定の output_dir")
    return parser.parse_args()


def main() -> None:
    """統計レポート作成のエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    config = load_config(args.config)
    process(config, args.out or config.output_dir)


if __name__ == "__main__":
    main()
