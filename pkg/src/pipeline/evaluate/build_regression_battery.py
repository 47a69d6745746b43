"""指標の週次リターンで対象指数の週次リターンを説明する回帰バッテリーを実行する。

引数:
    - --config: エンジン設定 TOML
    - --out: 出力ディレクトリ。省略時は設定の output_dir
    - --lags: ラグ次数 p。設定の regression.lags を上書きする
    - --overlap: on / off / both。設定の regression.overlap を上書きする

入力:
    - 設定の markets[].price_csv / iv_csv
    - 設定の benchmarks.{catfin,ciss,srisk,cleveland}_csv (水準系列)

出力:
    - <out>/evaluate/battery.json
    - <out>/evaluate/battery.csv

主な内容:
    - OLS (自由度調整済み R²)
    - 閾値未満の行で推定する擬似分位点 OLS
    - 分位点回帰 (擬似 R²)
    - 説明変数セット (各指標単独と全指標同時) × ラグ次数 {1, p} × 重複有無の全組み合わせ
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

from src.config import apply_overrides, load_config
from src.models import BatteryDocument, EngineConfig
from src.pipeline.common import StageContext, stage_dir
from src.regression import predictor_sets, run_battery
from src.utils import save_frame, save_json

STAGE = "evaluate"
TABLE_KEYS = ["model_kind", "lag_depth", "overlap", "threshold_or_tau"]
logger = logging.getLogger(__name__)


def battery_table(document: BatteryDocument, set_labels: list[str]) -> pd.DataFrame:
    """行を閾値/τ、列を説明変数セットにした適合度の表。"""

    rows: dict[tuple, dict[str, object]] = {}
    for entry in document.entries.values():
        key = (entry.model_kind, entry.lag_depth, "on" if entry.overlap else "off", entry.threshold_or_tau)
        row = rows.setdefault(key, dict(zip(TABLE_KEYS, key)))
        row[entry.predictor_set] = entry.fit if entry.status == "ok" else None
    return pd.DataFrame(list(rows.values()), columns=TABLE_KEYS + set_labels)


def process(config: EngineConfig, out_dir: Path, context: StageContext | None = None) -> list[Path]:
    """回帰バッテリーを実行し、JSON と表形式 CSV を保存する。"""

    context = context or StageContext(config)
    target = context.target_prices().renamed(config.target_market)
    predictors = context.sri_levels()
    result = run_battery(target, predictors, config.regression)
    context.record_counts(STAGE, result.row_counts)
    context.dropped_rows.extend(result.dropped_rows)

    directory = stage_dir(out_dir, STAGE)
    set_labels = [label for label, _ in predictor_sets(list(predictors))]
    outputs = [
        save_json(directory / "battery.json", result.document.model_dump(mode="json")),
        save_frame(directory / "battery.csv", battery_table(result.document, set_labels)),
    ]
    logger.info("回帰バッテリー保存: path=%s entries=%s", outputs[0], len(result.document.entries))
    return outputs


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="指標の予測力を評価する回帰バッテリーを実行する")
    parser.add_argument("--config", type=Path, required=True, help="エンジン設定 TOML")
    parser.add_argument("--out", type=Path, help="出力ディレクトリ。省略時は設定の output_dir")
    parser.add_argument("--lags", type=int, help="ラグ次数 p")
    parser.add_argument("--overlap", choices=["on", "off", "both"], help="重複リターンの扱い")
    return parser.parse_args()


def main() -> None:
    """回帰バッテリーのエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    config = apply_overrides(load_config(args.config), out=args.out, lags=args.lags, overlap=args.overlap)
    process(config, config.output_dir)


if __name__ == "__main__":
    main()
