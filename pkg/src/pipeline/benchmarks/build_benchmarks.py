"""外部で推定された入力からベンチマーク指標 (SRISK・クリーブランド指標・CATFIN) を計算する。

引数:
    - --config: エンジン設定 TOML
    - --out: 出力ディレクトリ。省略時は設定の output_dir

入力:
    - benchmarks.firms_csv (`name,W,D,lrmes[,k]`)
    - benchmarks.dd_panel_csv (`date,bank1,...`) と benchmarks.pdd_csv (`date,pdd`)
    - benchmarks.var_panel_csv (`date,firm1,...` の日次リターン)
    - benchmarks.catfin_gpd_csv / catfin_sged_csv (外部推定の VaR 系列)

出力:
    - <out>/benchmarks/srisk_firms.csv
    - <out>/benchmarks/srisk_aggregate.csv
    - <out>/benchmarks/cleveland.csv
    - <out>/benchmarks/var_np.csv
    - <out>/benchmarks/catfin.csv

主な内容:
    - 企業別 SRISK と正の資本不足の合計
    - ADD と PDD のスプレッド、MAJOR_STRESS / ELEVATED 判定
    - 日次断面の非パラメトリック VaR
    - 標準化した3種の VaR の固定係数による CATFIN 合成
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

from src.benchmarks import catfin_series, cleveland_spread, srisk_aggregate, srisk_firm, standardize, var_np_series
from src.config import check_input_paths, load_config
from src.ingest import read_firms, read_panel, read_series
from src.models import EngineConfig
from src.pipeline.common import StageContext, stage_dir
from src.series import align
from src.utils import save_frame

STAGE = "benchmarks"
logger = logging.getLogger(__name__)


def build_srisk(config: EngineConfig, directory: Path, context: StageContext) -> list[Path]:
    settings = config.benchmarks
    firms = read_firms(settings.firms_csv, k=settings.firms_k)
    values = [srisk_firm(firm) for firm in firms]
    frame = pd.DataFrame(
        {
            "name": [firm.name for firm in firms],
            "W": [firm.equity for firm in firms],
            "D": [firm.debt for firm in firms],
            "lrmes": [firm.lrmes for firm in firms],
            "k": [firm.k for firm in firms],
            "srisk": values,
        }
    )
    total = srisk_aggregate(values)
    summary = pd.DataFrame(
        {
            "firms": [len(firms)],
            "shortfall_firms": [sum(1 for value in values if value > 0)],
            "srisk": [total],
            "crisis_horizon": [settings.distress.horizon],
            "crisis_threshold": [settings.distress.threshold],
        }
    )
    context.record_counts(STAGE, {"firms": len(firms)})
    logger.info("SRISK 計算完了: firms=%s total=%s", len(firms), total)
    return [
        save_frame(directory / "srisk_firms.csv", frame),
        save_frame(directory / "srisk_aggregate.csv", summary),
    ]


def build_cleveland(config: EngineConfig, directory: Path, context: StageContext) -> list[Path]:
    settings = config.benchmarks
    panel = read_panel(settings.dd_panel_csv, unit="dd")
    pdd = read_series(settings.pdd_csv, name="pdd", unit="dd")
    result = cleveland_spread(panel, pdd, extended_days=settings.extended_days)
    _, pdd_aligned = align([result.spread, pdd], "union")
    frame = pd.DataFrame(
        {
            "date": [day.isoformat() for day in result.spread.dates],
            "add": result.add.values,
            "pdd": pdd_aligned.values,
            "spread": result.spread.values,
            "flag": [flag.value for flag in result.flags],
        }
    )
    context.record_counts(STAGE, {"cleveland_dates": len(result.spread), "dd_banks": len(panel)})
    return [save_frame(directory / "cleveland.csv", frame)]


def build_catfin(config: EngineConfig, directory: Path, context: StageContext) -> list[Path]:
    settings = config.benchmarks
    panel = read_panel(settings.var_panel_csv, unit="return")
    var_np = var_np_series(panel, settings.var_confidence)
    outputs = [
        save_frame(
            directory / "var_np.csv",
            pd.DataFrame({"date": [day.isoformat() for day in var_np.dates], "var_np": var_np.values}),
        )
    ]
    context.record_counts(STAGE, {"var_dates": len(var_np), "var_firms": len(panel)})
    if settings.catfin_gpd_csv is None or settings.catfin_sged_csv is None:
        logger.info("GPD / SGED の VaR 系列がないため CATFIN 合成を省略します")
        return outputs

    gpd = read_series(settings.catfin_gpd_csv, name="var_gpd", unit="return")
    sged = read_series(settings.catfin_sged_csv, name="var_sged", unit="return")
    catfin = catfin_series(gpd, sged, var_np)
    components = align([standardize(gpd), standardize(sged), standardize(var_np), catfin], "intersect")
    frame = pd.DataFrame({"date": [day.isoformat() for day in catfin.dates]})
    for series in components:
        frame[series.name] = series.values
    outputs.append(save_frame(directory / "catfin.csv", frame))
    logger.info("CATFIN 計算完了: dates=%s defined=%s", len(catfin), catfin.non_missing_count())
    return outputs


def process(config: EngineConfig, out_dir: Path, context: StageContext | None = None) -> list[Path]:
    """設定された入力があるベンチマークだけを計算して保存する。"""

    context = context or StageContext(config)
    check_input_paths(config)
    settings = config.benchmarks
    directory = stage_dir(out_dir, STAGE)
    outputs: list[Path] = []
    if settings.firms_csv is not None:
        outputs.extend(build_srisk(config, directory, context))
    if settings.dd_panel_csv is not None and settings.pdd_csv is not None:
        outputs.extend(build_cleveland(config, directory, context))
    elif settings.dd_panel_csv is not None or settings.pdd_csv is not None:
        logger.warning("dd_panel_csv と pdd_csv の片方しかないためクリーブランド指標を省略します")
    if settings.var_panel_csv is not None:
        outputs.extend(build_catfin(config, directory, context))
    if not outputs:
        logger.info("ベンチマーク入力が設定されていないため何も出力しません")
    return outputs


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="ベンチマーク指標を計算する")
    parser.add_argument("--config", type=Path, required=True, help="エンジン設定 TOML")
    parser.add_argument("--out", type=Path, help="出力ディレクトリ。省略時は設定の output_dir")
    return parser.parse_args()


def main() -> None:
    """ベンチマーク計算のエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    config = load_config(args.config)
    process(config, args.out or config.output_dir)


if __name__ == "__main__":
    main()
