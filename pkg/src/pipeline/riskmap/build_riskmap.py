"""国別・全体 IVRVSRI を動的分位点でバケット分類し、リスクマップ CSV を保存する。

引数:
    - --config: エンジン設定 TOML
    - --out: 出力ディレクトリ。省略時は設定の output_dir

入力:
    - 設定の markets[].price_csv / iv_csv (指標を再計算する)

出力:
    - <out>/riskmap/<系列名>.csv (`date,value,bucket,color`)
    - <out>/riskmap/occupancy.csv
    - <out>/riskmap/sensitivity.csv (感応度設定がある場合)

主な内容:
    - 各日付のバケット番号と色 (warmup 中は空欄)
    - 系列ごとのバケット占有率
    - 代替の分位点・履歴窓・warmup・RV 窓長で作ったマップとの一致率
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
from src.errors import InsufficientDataError
from src.models import EngineConfig, MapAgreement
from src.pipeline.common import StageContext, stage_dir
from src.riskmap import RiskMap, bucket_colors, classify, compare_maps, occupancy, sensitivity
from src.series import TimeSeries
from src.utils import save_frame, slugify_label

STAGE = "riskmap"
logger = logging.getLogger(__name__)


def map_series(context: StageContext) -> list[TimeSeries]:
    """リスクマップを作る系列。国別 IVRVSRI を市場順に並べ、最後に全体 IVRVSRI。"""

    indicators = context.indicators()
    return [indicators.country[market] for market in indicators.markets] + [indicators.ivrvsri]


def build_maps(context: StageContext) -> list[RiskMap]:
    policy = context.config.riskmap.policy
    return [classify(series, policy) for series in map_series(context)]


def riskmap_frame(risk_map: RiskMap) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "date": [day.isoformat() for day in risk_map.dates],
            "value": risk_map.values,
            "bucket": pd.array(risk_map.buckets, dtype="Int64"),
            "color": [color or "" for color in risk_map.colors],
        }
    )


def occupancy_frame(maps: list[RiskMap]) -> pd.DataFrame:
    rows: list[dict[str, object]] = []
    for risk_map in maps:
        palette = bucket_colors(risk_map.bucket_count)
        try:
            shares = occupancy(risk_map)
        except InsufficientDataError:
            logger.warning("分類済み日付がないため占有率を空欄にします: series=%s", risk_map.name)
            shares = {}
        for bucket in range(1, risk_map.bucket_count + 1):
            rows.append(
                {
                    "series": risk_map.name,
                    "bucket": bucket,
                    "color": palette[bucket - 1],
                    "share": shares.get(bucket),
                    "classified_dates": risk_map.classified_count(),
                }
            )
    return pd.DataFrame(rows, columns=["series", "bucket", "color", "share", "classified_dates"])


def sensitivity_rows(context: StageContext, base_map: RiskMap) -> list[MapAgreement]:
    """分位点・窓の代替設定と、RV 窓長の代替値で全体マップを比較する。"""

    settings = context.config.riskmap
    indicator = context.indicators().ivrvsri
    results = sensitivity(indicator, settings.policy, settings.sensitivity.policies)
    for window in settings.sensitivity.rv_windows:
        alternative = classify(context.indicators(rv_window=window).ivrvsri, settings.policy)
        agreement = compare_maps(base_map, alternative, label=f"rv_window={window}")
        logger.info("RV 窓長の感応度: rv_window=%s agreement=%s", window, agreement.agreement)
        results.append(agreement)
    return results


def process(config: EngineConfig, out_dir: Path, context: StageContext | None = None) -> list[Path]:
    """リスクマップ一式を保存する。"""

    context = context or StageContext(config)
    directory = stage_dir(out_dir, STAGE)
    maps = build_maps(context)
    outputs: list[Path] = []
    for risk_map in maps:
        path = save_frame(directory / f"{slugify_label(risk_map.name)}.csv", riskmap_frame(risk_map))
        logger.info(
            "リスクマップ保存: path=%s dates=%s classified=%s", path, len(risk_map), risk_map.classified_count()
        )
        outputs.append(path)
    context.record_counts(STAGE, {risk_map.name: risk_map.classified_count() for risk_map in maps})
    outputs.append(save_frame(directory / "occupancy.csv", occupancy_frame(maps)))

    settings = config.riskmap.sensitivity
    if settings.policies or settings.rv_windows:
        agreements = sensitivity_rows(context, maps[-1])
        frame = pd.DataFrame(
            [agreement.model_dump() for agreement in agreements],
            columns=["label", "compared_dates", "agreement", "mean_abs_bucket_diff"],
        )
        outputs.append(save_frame(directory / "sensitivity.csv", frame))
    return outputs


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="IVRVSRI のリスクマップを作成する")
    parser.add_argument("--config", type=Path, required=True, help="エンジン設定 TOML")
    parser.add_argument("--out", type=Path, help="出力ディレクトリ。省略時は設定の output_dir")
    return parser.parse_args()


def main() -> None:
    """リスクマップ作成のエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    config = load_config(args.config)
    process(config, args.out or config.output_dir)


if __name__ == "__main__":
    main()
