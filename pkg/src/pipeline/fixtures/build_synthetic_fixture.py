"""乱数シードから合成データ一式と設定ファイルを作る。

引数:
    - out_dir: 出力先ディレクトリ
    - --seed: 乱数シード。既定値は 7
    - --days: 営業日数。既定値は 600

入力:
    - なし

出力:
    - <out_dir>/config.toml
    - <out_dir>/prices/<market>.csv
    - <out_dir>/iv/<market>.csv
    - <out_dir>/benchmarks/*.csv

主な内容:
    - 共通のストレス局面を持つ4市場の価格と IV 指数
    - 企業別 SRISK 入力、銀行別 DD と PDD、VaR 用の断面リターン、GPD / SGED の VaR 系列
    - CISS と SRISK の水準系列
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

PROJECT_ROOT = Path(__file__).resolve().parents[3]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.series import TimeSeries
from src.synthetic import distance_to_default_panel, level_series, synthetic_markets
from src.utils import save_frame, save_text

DEFAULT_SEED = 7
DEFAULT_DAYS = 600
CONFIG_TEMPLATE = """\
output_dir = "out"
rv_window = 21
annualization = 252
rv_scale = 100
w_iv = 0.5
{markets}
[riskmap.policy]
breakpoints = [0.25, 0.5, 0.75]
window = "expanding"
warmup = 126

[riskmap.sensitivity]
rv_windows = [63]

[[riskmap.sensitivity.policies]]
window = "rolling"
rolling_days = 252
warmup = 126

[[riskmap.sensitivity.policies]]
window = "expanding"
warmup = 126
exclude_current = true

[regression]
target = "US"
lags = 5
horizon = 5
return_kind = "simple"
overlap = "both"

[stats]
correlation_lag = 5
rolling_window = 126

[benchmarks]
firms_csv = "benchmarks/firms.csv"
dd_panel_csv = "benchmarks/dd_panel.csv"
pdd_csv = "benchmarks/pdd.csv"
var_panel_csv = "benchmarks/var_panel.csv"
catfin_gpd_csv = "benchmarks/var_gpd.csv"
catfin_sged_csv = "benchmarks/var_sged.csv"
ciss_csv = "benchmarks/ciss.csv"
srisk_csv = "benchmarks/srisk.csv"
"""
MARKET_TEMPLATE = """
[[markets]]
name = "{name}"
price_csv = "prices/{name}.csv"
iv_csv = "iv/{name}.csv"
cap = {cap}
"""
logger = logging.getLogger(__name__)


def series_csv(path: Path, series: list[TimeSeries]) -> Path:
    frame = pd.DataFrame({"date": [day.isoformat() for day in series[0].dates]})
    for item in series:
        frame[item.name] = item.values
    return save_frame(path, frame)


def firms_frame(seed: int, count: int = 8) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    return pd.DataFrame(
        {
            "name": [f"firm{index + 1}" for index in range(count)],
            "W": rng.uniform(50.0, 500.0, count).round(2),
            "D": rng.uniform(200.0, 5000.0, count).round(2),
            "lrmes": rng.uniform(0.2, 0.7, count).round(4),
        }
    )


def process(out_dir: Path, seed: int = DEFAULT_SEED, days: int = DEFAULT_DAYS) -> Path:
    """合成データを書き出し、設定ファイルのパスを返す。"""

    out_dir = Path(out_dir)
    markets = synthetic_markets(seed, n_days=days)
    dates = markets[0].prices.dates
    for market in markets:
        series_csv(out_dir / "prices" / f"{market.name}.csv", [market.prices.renamed("close")])
        series_csv(out_dir / "iv" / f"{market.name}.csv", [market.iv.renamed("iv")])

    benchmarks = out_dir / "benchmarks"
    save_frame(benchmarks / "firms.csv", firms_frame(seed + 1))
    panel, pdd = distance_to_default_panel(seed + 2, dates)
    series_csv(benchmarks / "dd_panel.csv", panel)
    series_csv(benchmarks / "pdd.csv", [pdd])

    rng = np.random.default_rng(seed + 3)
    returns = [
        TimeSeries(dates, rng.standard_t(4, len(dates)) * 0.015, name=f"firm{index + 1}") for index in range(12)
    ]
    series_csv(benchmarks / "var_panel.csv", returns)
    series_csv(benchmarks / "var_gpd.csv", [level_series(seed + 4, dates, "var_gpd", start=0.04, scale=0.02)])
    series_csv(benchmarks / "var_sged.csv", [level_series(seed + 5, dates, "var_sged", start=0.035, scale=0.02)])
    series_csv(benchmarks / "ciss.csv", [level_series(seed + 6, dates, "ciss", start=0.2, scale=0.03)])
    series_csv(benchmarks / "srisk.csv", [level_series(seed + 7, dates, "srisk", start=500.0, scale=0.01)])

    market_tables = "".join(MARKET_TEMPLATE.format(name=market.name, cap=market.cap) for market in markets)
    config_path = save_text(out_dir / "config.toml", CONFIG_TEMPLATE.format(markets=market_tables))
    logger.info("合成データ保存: dir=%s seed=%s days=%s", out_dir, seed, days)
    return config_path


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="合成データ一式と設定ファイルを作る")
    parser.add_argument("out_dir", type=Path, help="出力先ディレクトリ")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="乱数シード")
    parser.add_argument("--days", type=int, default=DEFAULT_DAYS, help="営業日数")
    return parser.parse_args()


def main() -> None:
    """合成データ作成のエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    process(args.out_dir, seed=args.seed, days=args.days)


if __name__ == "__main__":
    main()
