"""市場ごとの価格と IV 指数から IVSRI / RVSRI / IVRVSRI を計算して CSV に保存する。

引数:
    - --config: エンジン設定 TOML
    - --out: 出力ディレクトリ。省略時は設定の output_dir

入力:
    - 設定の markets[].price_csv
    - 設定の markets[].iv_csv

出力:
    - <out>/indicator/indicators.csv
    - <out>/indicator/weights.csv

主な内容:
    - 市場別 IV 指数と RV (rv_scale 倍)
    - 国別 IVRVSRI
    - 時価総額ウェイトによる IVSRI / RVSRI
    - 全体 IVRVSRI (2通りの合成の一致を確認済み)
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
from src.indicator import IndicatorSet
from src.models import EngineConfig
from src.pipeline.common import StageContext, stage_dir
from src.series import TimeSeries
from src.utils import save_frame

STAGE = "indicator"
logger = logging.getLogger(__name__)


def series_frame(columns: dict[str, TimeSeries]) -> pd.DataFrame:
    """同じ日付インデックスの系列を `date` 列つきの横持ち表にする。"""

    first = next(iter(columns.values()))
    frame = pd.DataFrame({"date": [day.isoformat() for day in first.dates]})
    for label, series in columns.items():
        frame[label] = series.values
    return frame


def weights_frame(indicators: IndicatorSet) -> pd.DataFrame:
    weights = indicators.market_weights
    return pd.DataFrame(
        {
            "market": list(weights.labels),
            "cap": list(weights.caps),
            "weight": list(weights.weights),
        }
    )


def process(config: EngineConfig, out_dir: Path, context: StageContext | None = None) -> list[Path]:
    """指標一式を計算して保存する。"""

    context = context or StageContext(config)
    indicators = context.indicators()
    directory = stage_dir(out_dir, STAGE)
    outputs = [
        save_frame(directory / "indicators.csv", series_frame(indicators.columns())),
        save_frame(directory / "weights.csv", weights_frame(indicators)),
    ]
    logger.info("指標 CSV 保存: path=%s rows=%s", outputs[0], len(indicators.dates))
    return outputs


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="IVRVSRI 指標一式を計算する")
    parser.add_argument("--config", type=Path, required=True, help="エンジン設定 TOML")
    parser.add_argument("--out", type=Path, help="出力ディレクトリ。省略時は設定の output_dir")
    return parser.parse_args()


def main() -> None:
    """指標計算のエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    config = load_config(args.config)
    process(config, args.out or config.output_dir)


if __name__ == "__main__":
    main()
