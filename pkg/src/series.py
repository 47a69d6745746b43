"""日付つき時系列の容器と、リターン・ドローダウン・記述統計・相関の計算。

欠損は NaN で表し、0 とは区別する。全ての型は生成後に変更しない。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

import numpy as np
from scipy import stats

from src.errors import (
    ConfigurationError,
    DomainError,
    InsufficientDataError,
    InsufficientHistoryError,
    InsufficientOverlapError,
)
from src.models import CorrelationMatrix, StatsSummary
from src.utils import quantile

MIN_CORRELATION_PAIRS = 3
logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """取引日の昇順に並んだ実数列。"""

    dates: tuple[date, ...]
    values: np.ndarray
    name: str = ""
    unit: str | None = None

    def __post_init__(self) -> None:
        dates = tuple(self.dates)
        values = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if len(dates) != values.size:
            raise ConfigurationError(
                f"日付数と値の数が一致しません: series={self.name} dates={len(dates)} values={values.size}"
            )
        for earlier, later in zip(dates, dates[1:]):
            if later <= earlier:
                raise ConfigurationError(f"日付が狭義単調増加ではありません: series={self.name} date={later}")
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def non_missing_count(self) -> int:
        return int(np.count_nonzero(~self.missing))

    def value_at(self, day: date) -> float | None:
        """指定日の値を返す。日付がない場合や欠損は None。"""

        try:
            index = self.dates.index(day)
        except ValueError:
            return None
        value = self.values[index]
        return None if math.isnan(value) else float(value)

    def with_values(self, values: np.ndarray, name: str | None = None, unit: str | None = None) -> TimeSeries:
        """同じ日付で値だけを差し替えた系列を返す。"""

        return TimeSeries(self.dates, values, name=self.name if name is None else name, unit=unit or self.unit)

    def renamed(self, name: str) -> TimeSeries:
        return TimeSeries(self.dates, self.values, name=name, unit=self.unit)

    def scaled(self, factor: float, unit: str | None = None) -> TimeSeries:
        """値を定数倍した系列を返す。"""

        return self.with_values(self.values * factor, unit=unit)

    def shifted(self, lag: int) -> TimeSeries:
        """値を lag 取引日だけ後ろへずらす。先頭 lag 件は欠損になる。"""

        if lag < 0:
            raise ConfigurationError(f"lag には0以上を指定してください: {lag}")
        shifted = np.full(len(self), np.nan)
        if lag < len(self):
            shifted[lag:] = self.values[: len(self) - lag]
        return self.with_values(shifted)

    def slice_until(self, day: date) -> TimeSeries:
        """指定日以前だけを残した系列を返す。"""

        count = sum(1 for current in self.dates if current <= day)
        return TimeSeries(self.dates[:count], self.values[:count], name=self.name, unit=self.unit)

    def take(self, positions: Sequence[int] | np.ndarray) -> TimeSeries:
        """位置指定で部分系列を取り出す。"""

        indices = np.asarray(positions, dtype=int)
        return TimeSeries(
            tuple(self.dates[index] for index in indices),
            self.values[indices],
            name=self.name,
            unit=self.unit,
        )

    def dropna(self) -> np.ndarray:
        """欠損を除いた値の配列を返す。"""

        return self.values[~self.missing]


class ReturnKind(str, Enum):
    """リターンの定義。"""

    LOG = "log"
    SIMPLE = "simple"


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """価格系列から作ったリターン系列と、その作り方。"""

    base: TimeSeries
    kind: ReturnKind
    horizon: int
    overlap: bool
    source_positions: tuple[int, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigurationError(f"horizon には1以上を指定してください: {self.horizon}")

    @property
    def dates(self) -> tuple[date, ...]:
        return self.base.dates

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    @property
    def name(self) -> str:
        return self.base.name

    def __len__(self) -> int:
        return len(self.base)


def check_positive(series: TimeSeries, operation: str) -> None:
    """非欠損値が全て正であることを確認する。"""

    bad = np.flatnonzero(~series.missing & (series.values <= 0))
    if bad.size:
        first = int(bad[0])
        raise DomainError(
            f"{operation}: 非正の価格があります: series={series.name} date={series.dates[first]} value={series.values[first]}"
        )


def compute_returns(
    prices: TimeSeries,
    kind: ReturnKind | str = ReturnKind.LOG,
    horizon: int = 1,
    overlap: bool = True,
) -> ReturnSeries:
    """h 取引日リターンを計算する。端点に欠損がある日付のリターンは欠損。"""

    kind = ReturnKind(kind)
    if horizon < 1:
        raise ConfigurationError(f"horizon には1以上を指定してください: {horizon}")
    if prices.non_missing_count() < horizon + 1 or len(prices) < horizon + 1:
        raise InsufficientHistoryError(
            f"リターン計算に必要な履歴が足りません: series={prices.name} "
            f"observations={prices.non_missing_count()} required={horizon + 1}"
        )
    if kind is ReturnKind.LOG:
        check_positive(prices, "対数リターン")
    else:
        zero_base = np.flatnonzero(~prices.missing[:-horizon] & (prices.values[:-horizon] == 0))
        if zero_base.size:
            first = int(zero_base[0])
            raise DomainError(f"単純リターンの分母が0です: series={prices.name} date={prices.dates[first]}")

    step = 1 if overlap else horizon
    positions = np.arange(horizon, len(prices), step)
    current = prices.values[positions]
    previous = prices.values[positions - horizon]
    with np.errstate(invalid="ignore", divide="ignore"):
        if kind is ReturnKind.LOG:
            values = np.log(current / previous)
        else:
            values = current / previous - 1.0
    base = TimeSeries(
        tuple(prices.dates[position] for position in positions),
        values,
        name=prices.name,
        unit="return",
    )
    return ReturnSeries(
        base=base,
        kind=kind,
        horizon=horizon,
        overlap=overlap,
        source_positions=tuple(int(position) for position in positions),
    )


def drawdown(prices: TimeSeries) -> TimeSeries:
    """各日の価格が過去最高値からどれだけ下がっているかを返す。"""

    if prices.non_missing_count() == 0:
        raise InsufficientHistoryError(f"ドローダウン計算には1件以上の価格が必要です: series={prices.name}")
    check_positive(prices, "ドローダウン")
    running_max = np.fmax.accumulate(prices.values)
    with np.errstate(invalid="ignore"):
        values = prices.values / running_max - 1.0
    values = np.where(prices.missing, np.nan, np.minimum(values, 0.0))
    return prices.with_values(values, name=f"{prices.name}_drawdown", unit="return")


def describe(series: TimeSeries) -> StatsSummary:
    """欠損を除いた値で記述統計量と Jarque-Bera 検定を計算する。"""

    sample = series.dropna()
    n_missing = len(series) - sample.size
    if sample.size == 0:
        raise InsufficientDataError(f"記述統計に使える値がありません: series={series.name}")

    stdev = float(np.std(sample, ddof=1)) if sample.size > 1 else 0.0
    skewness = kurtosis = jb_stat = jb_pvalue = None
    if sample.size < 4:
        logger.warning("観測数が4未満のため歪度・尖度を欠損にします: series=%s nobs=%s", series.name, sample.size)
    elif stdev == 0.0 or np.ptp(sample) == 0.0:
        logger.warning("標準偏差が0のため歪度・尖度を欠損にします: series=%s", series.name)
    else:
        skewness = float(stats.skew(sample, bias=True))
        kurtosis = float(stats.kurtosis(sample, fisher=True, bias=True))
        jb_stat = sample.size / 6.0 * (skewness**2 + kurtosis**2 / 4.0)
        jb_pvalue = float(stats.chi2.sf(jb_stat, df=2))

    return StatsSummary(
        name=series.name,
        nobs=int(sample.size),
        n_missing=int(n_missing),
        min=float(np.min(sample)),
        q1=quantile(sample, 0.25),
        mean=float(np.mean(sample)),
        median=quantile(sample, 0.5),
        q3=quantile(sample, 0.75),
        max=float(np.max(sample)),
        stdev=stdev,
        skewness=skewness,
        kurtosis=kurtosis,
        jb_stat=jb_stat,
        jb_pvalue=jb_pvalue,
    )


def align(panel: Sequence[TimeSeries], policy: str = "intersect") -> list[TimeSeries]:
    """複数系列を共通の日付インデックスにそろえる。"""

    if not panel:
        raise ConfigurationError("align には1系列以上が必要です。")
    if policy not in {"intersect", "union"}:
        raise ConfigurationError(f"未対応の align 方針です: {policy}")

    if all(series.dates == panel[0].dates for series in panel):
        return list(panel)

    date_sets = [set(series.dates) for series in panel]
    if policy == "intersect":
        common = set.intersection(*date_sets)
        if not common:
            offending = [series.name for series in panel if not (set(series.dates) & set(panel[0].dates))]
            names = offending or [series.name for series in panel]
            raise InsufficientOverlapError(f"共通の日付がありません: series={names}")
        index = tuple(sorted(common))
    else:
        index = tuple(sorted(set.union(*date_sets)))

    aligned: list[TimeSeries] = []
    for series in panel:
        lookup = dict(zip(series.dates, series.values))
        values = np.array([lookup.get(day, np.nan) for day in index], dtype=float)
        aligned.append(TimeSeries(index, values, name=series.name, unit=series.unit))
    return aligned


def pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    """欠損を含む2配列のペアワイズ完全観測で Pearson 相関を返す。"""

    mask = ~(np.isnan(x) | np.isnan(y))
    if np.count_nonzero(mask) < MIN_CORRELATION_PAIRS:
        return None
    xs = x[mask] - np.mean(x[mask])
    ys = y[mask] - np.mean(y[mask])
    denominator = math.sqrt(float(np.dot(xs, xs)) * float(np.dot(ys, ys)))
    if denominator == 0.0:
        return None
    return float(np.clip(np.dot(xs, ys) / denominator, -1.0, 1.0))


def correlation_matrix(panel: Sequence[TimeSeries], lag: int = 0) -> CorrelationMatrix:
    """行の変数 t と列の変数 t-lag の Pearson 相関行列を計算する。"""

    if lag < 0:
        raise ConfigurationError(f"lag には0以上を指定してください: {lag}")
    aligned = align(panel, "union")
    labels = [series.name for series in aligned]
    size = len(aligned)
    entries: list[list[float | None]] = [[None] * size for _ in range(size)]
    for row in range(size):
        start = row if lag == 0 else 0
        for column in range(start, size):
            if lag == 0 and row == column:
                value = 1.0 if pearson(aligned[row].values, aligned[row].values) is not None else None
            else:
                value = pearson(aligned[row].values, aligned[column].shifted(lag).values)
            if value is None:
                logger.warning(
                    "相関を計算できないため欠損にします: row=%s column=%s lag=%s", labels[row], labels[column], lag
                )
            entries[row][column] = value
            if lag == 0:
                entries[column][row] = value
    return CorrelationMatrix(labels=labels, entries=entries, lag=lag)


def rolling_correlation(x: TimeSeries, y: TimeSeries, window: int, lag: int = 0) -> TimeSeries:
    """直近 window 取引日での x_t と y_{t-lag} の相関を日次で返す。"""

    if window < MIN_CORRELATION_PAIRS:
        raise ConfigurationError(f"rolling window には{MIN_CORRELATION_PAIRS}以上を指定してください: {window}")
    left, right = align([x, y], "union")
    right = right.shifted(lag)
    values = np.full(len(left), np.nan)
    for end in range(window - 1, len(left)):
        value = pearson(left.values[end - window + 1 : end + 1], right.values[end - window + 1 : end + 1])
        if value is not None:
            values[end] = value
    return left.with_values(values, name=f"corr_{x.name}_{y.name}", unit=None)
