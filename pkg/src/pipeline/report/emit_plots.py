"""指標とリスクマップを SVG に描画する。

引数:
    - --config: エンジン設定 TOML
    - --out: 出力ディレクトリ。省略時は設定の output_dir

入力:
    - 設定の markets[].price_csv / iv_csv (指標とリスクマップを再計算する)

出力:
    - <out>/report/indicators.svg
    - <out>/report/country_ivrvsri.svg
    - <out>/report/drawdowns.svg
    - <out>/report/riskmap_strip.svg
    - <out>/report/ivrvsri_map.svg

主な内容:
    - IVSRI / RVSRI / IVRVSRI の折れ線
    - 国別 IVRVSRI の折れ線
    - 市場指数のドローダウン
    - 市場ごとに1行のリスクマップ色帯
    - 全体リスクマップを背景にした IVRVSRI と対象指数
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[3]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.config import load_config
from src.models import EngineConfig
from src.pipeline.common import StageContext, stage_dir
from src.pipeline.riskmap.build_riskmap import build_maps
from src.plots import heat_strip_svg, line_chart_svg, map_chart_svg
from src.series import align, drawdown
from src.utils import save_text

STAGE = "report"
logger = logging.getLogger(__name__)


def process(config: EngineConfig, out_dir: Path, context: StageContext | None = None) -> list[Path]:
    """SVG 一式を保存する。"""

    context = context or StageContext(config)
    directory = stage_dir(out_dir, STAGE)
    indicators = context.indicators()
    maps = build_maps(context)
    target = context.target_prices().renamed(config.target_market)
    drawdowns = align([drawdown(market.prices).renamed(market.name) for market in context.markets()], "union")
    lookup = dict(zip(target.dates, target.values))
    target_on_index = indicators.ivrvsri.with_values(
        [lookup.get(day, float("nan")) for day in indicators.dates], name=target.name, unit="level"
    )

    charts = {
        "indicators.svg": line_chart_svg("IVSRI / RVSRI / IVRVSRI", [indicators.ivsri, indicators.rvsri, indicators.ivrvsri]),
        "country_ivrvsri.svg": line_chart_svg(
            "IVRVSRI by market", [indicators.country[market] for market in indicators.markets]
        ),
        "drawdowns.svg": line_chart_svg("Drawdowns", drawdowns),
        "riskmap_strip.svg": heat_strip_svg(f"Risk map ({config.riskmap.policy.describe()})", maps),
        "ivrvsri_map.svg": map_chart_svg(f"IVRVSRI and {target.name}", maps[-1], target_on_index),
    }
    outputs = [save_text(directory / name, text) for name, text in charts.items()]
    logger.info("SVG 保存: dir=%s files=%s", directory, len(outputs))
    return outputs


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="指標とリスクマップの SVG を出力する")
    parser.add_argument("--config", type=Path, required=True, help="エンジン設定 TOML")
    parser.add_argument("--out", type=Path, help="出力ディレクトリ。省略時は設定の output_dir")
    return parser.parse_args()


def main() -> None:
    """SVG 出力のエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    config = load_config(args.config)
    process(config, args.out or config.output_dir)


if __name__ == "__main__":
    main()
