"""ベンチマーク指標 (SRISK・クリーブランド連銀指標・CATFIN) の閉形式部分。

LRMES、距離デフォルト、GPD/SGED の VaR は外部で推定された値を受け取る。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.errors import (
    ConfigurationError,
    DomainError,
    InsufficientDataError,
    InternalConsistencyError,
)
from src.series import TimeSeries, align
from src.utils import quantile

DEFAULT_PRUDENTIAL_K = 0.08
SRISK_RELATIVE_TOLERANCE = 1e-9
CATFIN_COEFFICIENTS = (0.5700, 0.5719, 0.5889)
MAJOR_STRESS_SPREAD = 0.1
MAJOR_STRESS_MIN_RUN = 3
ELEVATED_SPREAD = 0.5
DEFAULT_EXTENDED_DAYS = 20
VAR_MIN_OBSERVATIONS_99 = 20
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FirmSnapshot:
    """SRISK 計算に必要な1社分の値。"""

    name: str
    equity: float
    debt: float
    lrmes: float
    k: float = DEFAULT_PRUDENTIAL_K

    def __post_init__(self) -> None:
        if not self.equity > 0:
            raise DomainError(f"株式時価総額 W は正の値が必要です: firm={self.name} W={self.equity}")
        if self.debt < 0:
            raise DomainError(f"負債簿価 D は0以上が必要です: firm={self.name} D={self.debt}")
        if not 0.0 <= self.k < 1.0:
            raise DomainError(f"k は [0,1) で指定してください: firm={self.name} k={self.k}")
        if not 0.0 <= self.lrmes < 1.0:
            raise DomainError(f"LRMES は [0,1) で指定してください: firm={self.name} lrmes={self.lrmes}")

    @property
    def leverage(self) -> float:
        """準レバレッジ (D+W)/W。"""

        return (self.debt + self.equity) / self.equity


class StressFlag(str, Enum):
    """クリーブランド連銀指標のストレス判定。"""

    NONE = ""
    ELEVATED = "ELEVATED"
    MAJOR_STRESS = "MAJOR_STRESS"


@dataclass(frozen=True, eq=False)
class ClevelandResult:
    """ADD、スプレッド、日付ごとのストレス判定。"""

    add: TimeSeries
    spread: TimeSeries
    flags: tuple[StressFlag, ...]

    def flagged_dates(self, flag: StressFlag) -> list:
        return [day for day, current in zip(self.spread.dates, self.flags) if current is flag]


def srisk_firm(snapshot: FirmSnapshot) -> float:
    """SRISK = kD - (1-k)W(1-LRMES)。レバレッジ表記の値と照合してから返す。"""

    k = snapshot.k
    shortfall = k * snapshot.debt - (1.0 - k) * snapshot.equity * (1.0 - snapshot.lrmes)
    leverage_form = snapshot.equity * (k * snapshot.leverage + (1.0 - k) * snapshot.lrmes - 1.0)
    scale = max(abs(shortfall), abs(leverage_form), snapshot.equity, 1.0)
    if abs(shortfall - leverage_form) > SRISK_RELATIVE_TOLERANCE * scale:
        raise InternalConsistencyError(
            f"SRISK の2つの表記が一致しません: firm={snapshot.name} direct={shortfall} leverage={leverage_form}"
        )
    return shortfall


def srisk_aggregate(firm_values: Sequence[float]) -> float:
    """負の資本不足 (余剰) を無視して合計する。"""

    return float(sum(max(value, 0.0) for value in firm_values))


def _run_lengths(condition: np.ndarray) -> np.ndarray:
    """条件が連続して真である日数を日付ごとに数える。"""

    condition = np.asarray(condition, dtype=bool)
    positions = np.arange(1, condition.size + 1)
    last_false = np.maximum.accumulate(np.where(condition, 0, positions))
    return np.where(condition, positions - last_false, 0)


def cleveland_spread(
    dd_panel: Sequence[TimeSeries],
    pdd: TimeSeries,
    extended_days: int = DEFAULT_EXTENDED_DAYS,
) -> ClevelandResult:
    """ADD (銀行別 DD の断面平均) と PDD のスプレッド、ストレス判定を返す。"""

    if not dd_panel:
        raise ConfigurationError("銀行別の距離デフォルト系列が1つもありません。")
    if extended_days < 1:
        raise ConfigurationError(f"extended_days には1以上を指定してください: {extended_days}")
    aligned = align([*dd_panel, pdd], "union")
    banks = np.vstack([series.values for series in aligned[:-1]])
    pdd_values = aligned[-1].values
    available = np.count_nonzero(~np.isnan(banks), axis=0)
    with np.errstate(invalid="ignore"):
        add_values = np.where(available > 0, np.nansum(banks, axis=0) / np.maximum(available, 1), np.nan)
    spread_values = add_values - pdd_values
    observed = ~np.isnan(spread_values)

    with np.errstate(invalid="ignore"):
        major_runs = _run_lengths(observed & (spread_values < MAJOR_STRESS_SPREAD))
        elevated_runs = _run_lengths(observed & (spread_values < ELEVATED_SPREAD))
    flags: list[StressFlag] = []
    for major, elevated in zip(major_runs, elevated_runs):
        if major >= MAJOR_STRESS_MIN_RUN:
            flags.append(StressFlag.MAJOR_STRESS)
        elif elevated >= extended_days:
            flags.append(StressFlag.ELEVATED)
        else:
            flags.append(StressFlag.NONE)

    dates = aligned[-1].dates
    add = TimeSeries(dates, add_values, name="ADD", unit="dd")
    spread = TimeSeries(dates, spread_values, name="cleveland_spread", unit="dd")
    logger.info(
        "クリーブランド指標計算完了: banks=%s dates=%s major_stress=%s elevated=%s",
        len(dd_panel),
        len(dates),
        flags.count(StressFlag.MAJOR_STRESS),
        flags.count(StressFlag.ELEVATED),
    )
    return ClevelandResult(add=add, spread=spread, flags=tuple(flags))


def var_nonparametric(returns: Sequence[float] | np.ndarray, confidence: float = 0.99) -> float:
    """経験分布の (1-c) 分位点の符号を反転した損失 VaR を返す。"""

    sample = np.asarray(returns, dtype=float)
    sample = sample[~np.isnan(sample)]
    if sample.size == 0:
        raise InsufficientDataError("VaR の計算に使えるリターンがありません。")
    if not 0.0 < confidence < 1.0:
        raise ConfigurationError(f"confidence は (0,1) で指定してください: {confidence}")
    if confidence >= 0.99 and sample.size < VAR_MIN_OBSERVATIONS_99:
        logger.warning("99%% VaR に対して観測数が少なすぎます: nobs=%s", sample.size)
    return -quantile(sample, 1.0 - confidence)


def var_np_series(panel: Sequence[TimeSeries], confidence: float = 0.99) -> TimeSeries:
    """日付ごとの断面リターンから非パラメトリック VaR を計算する。"""

    if not panel:
        raise ConfigurationError("VaR の断面パネルが空です。")
    aligned = align(panel, "union")
    matrix = np.vstack([series.values for series in aligned])
    values = np.full(matrix.shape[1], np.nan)
    for column in range(matrix.shape[1]):
        cross_section = matrix[:, column]
        cross_section = cross_section[~np.isnan(cross_section)]
        if cross_section.size >= 2:
            values[column] = -quantile(cross_section, 1.0 - confidence)
    return TimeSeries(aligned[0].dates, values, name="var_np", unit="return")


def standardize(series: TimeSeries) -> TimeSeries:
    """全標本の平均と標準偏差で z スコアに変換する。"""

    sample = series.dropna()
    if sample.size < 2:
        raise InsufficientDataError(f"標準化には2件以上の値が必要です: series={series.name}")
    stdev = float(np.std(sample, ddof=1))
    if stdev == 0.0:
        raise DomainError(f"標準偏差が0のため標準化できません: series={series.name}")
    return series.with_values((series.values - float(np.mean(sample))) / stdev, name=f"{series.name}_std")


def catfin_combine(v_gpd: float, v_sged: float, v_np: float) -> float:
    """標準化済み VaR 3種を固定係数で合成する。"""

    a, b, c = CATFIN_COEFFICIENTS
    return a * v_gpd + b * v_sged + c * v_np


def catfin_series(v_gpd: TimeSeries, v_sged: TimeSeries, v_np: TimeSeries) -> TimeSeries:
    """3種の VaR 系列を全標本で標準化して CATFIN 系列にする。"""

    gpd, sged, nonparametric = align([standardize(v_gpd), standardize(v_sged), standardize(v_np)], "intersect")
    values = np.array(
        [
            catfin_combine(a, b, c) if not (math.isnan(a) or math.isnan(b) or math.isnan(c)) else np.nan
            for a, b, c in zip(gpd.values, sged.values, nonparametric.values)
        ]
    )
    return gpd.with_values(values, name="catfin", unit="zscore")
