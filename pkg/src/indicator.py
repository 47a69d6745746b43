"""IV 指数と RV から国別・全体の IVSRI / RVSRI / IVRVSRI を合成する。

RV は小数表記、IV 指数はパーセントポイントなので、国別合成の前に RV を rv_scale 倍する。
全体の IVRVSRI は IVSRI と RVSRI の合成と、国別 IVRVSRI の加重和の2通りで計算し、一致を確認する。
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from src.errors import ConfigurationError, DomainError, InternalConsistencyError
from src.series import TimeSeries, align
from src.volatility import RVParams, realized_vol

COMPOSITION_TOLERANCE = 1e-10
PERCENT_SCALE = 100.0
logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MarketWeights:
    """時価総額から作った市場ウェイト。"""

    labels: tuple[str, ...]
    caps: tuple[float, ...]
    weights: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.labels)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.weights))


@dataclass(frozen=True)
class MixWeights:
    """IV 成分と RV 成分の混合比。"""

    w_iv: float = 0.5
    w_rv: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.w_iv <= 1.0 and 0.0 <= self.w_rv <= 1.0):
            raise ConfigurationError(f"混合比は [0,1] で指定してください: w_iv={self.w_iv} w_rv={self.w_rv}")
        if abs(self.w_iv + self.w_rv - 1.0) > 1e-12:
            raise ConfigurationError(f"w_iv + w_rv は1にしてください: w_iv={self.w_iv} w_rv={self.w_rv}")

    @classmethod
    def from_iv_weight(cls, w_iv: float) -> MixWeights:
        return cls(w_iv=w_iv, w_rv=1.0 - w_iv)


@dataclass(frozen=True, eq=False)
class IndicatorSet:
    """国別と全体の指標系列一式。全系列が同じ日付インデックスを持つ。"""

    markets: tuple[str, ...]
    iv: dict[str, TimeSeries]
    rv: dict[str, TimeSeries]
    country: dict[str, TimeSeries]
    ivsri: TimeSeries
    rvsri: TimeSeries
    market_weights: MarketWeights
    mix: MixWeights
    ivrvsri: TimeSeries | None = None

    @property
    def dates(self) -> tuple:
        return self.ivsri.dates

    def columns(self) -> dict[str, TimeSeries]:
        """出力 CSV の列順に系列を並べて返す。"""

        columns: dict[str, TimeSeries] = {}
        for market in self.markets:
            columns[f"IV_{market}"] = self.iv[market]
        for market in self.markets:
            columns[f"RV_{market}"] = self.rv[market]
        for market in self.markets:
            columns[f"IVRVSRI_{market}"] = self.country[market]
        columns["IVSRI"] = self.ivsri
        columns["RVSRI"] = self.rvsri
        if self.ivrvsri is not None:
            columns["IVRVSRI"] = self.ivrvsri
        return columns


def scaled_rv_unit(rv_scale: float) -> str:
    """rv_scale 倍した RV の単位ラベルを返す。"""

    if rv_scale == PERCENT_SCALE:
        return "percent"
    if rv_scale == 1.0:
        return "decimal"
    return f"decimal*{rv_scale:g}"


def cap_weights(caps: Sequence[float], labels: Sequence[str] | None = None) -> MarketWeights:
    """時価総額を合計1のウェイトに正規化する。"""

    if len(caps) == 0:
        raise ConfigurationError("時価総額が1つも指定されていません。")
    names = tuple(labels) if labels is not None else tuple(f"market{index + 1}" for index in range(len(caps)))
    if len(names) != len(caps):
        raise ConfigurationError(f"市場名と時価総額の数が一致しません: labels={len(names)} caps={len(caps)}")
    for name, cap in zip(names, caps):
        if not cap > 0:
            raise DomainError(f"時価総額は正の値が必要です: market={name} cap={cap}")
    array = np.asarray(caps, dtype=float)
    weights = array / array.sum()
    return MarketWeights(labels=names, caps=tuple(float(cap) for cap in array), weights=tuple(float(w) for w in weights))


def weighted_composite(series: Sequence[TimeSeries], weights: MarketWeights, name: str = "composite") -> TimeSeries:
    """系列の日次加重和。いずれかの入力が欠損の日付は欠損。"""

    if len(series) != len(weights):
        raise ConfigurationError(f"系列数とウェイト数が一致しません: series={len(series)} weights={len(weights)}")
    if any(item.dates != series[0].dates for item in series):
        raise ConfigurationError(f"合成対象の系列の日付がそろっていません: name={name}")
    stacked = np.vstack([item.values for item in series])
    values = np.asarray(weights.weights, dtype=float) @ stacked
    return series[0].with_values(values, name=name)


def ivrvsri_country(
    iv: TimeSeries,
    rv: TimeSeries,
    mix: MixWeights,
    rv_scale: float | None = None,
    name: str | None = None,
) -> TimeSeries:
    """国別 IVRVSRI = w_iv * IV + w_rv * RV。

    IV と RV の単位が異なる場合、rv_scale を渡したときだけ RV を rv_scale 倍して合成する。
    """

    if iv.dates != rv.dates:
        raise ConfigurationError(f"IV と RV の日付がそろっていません: iv={iv.name} rv={rv.name}")
    if iv.unit != rv.unit:
        if rv_scale is None:
            raise ConfigurationError(
                f"IV と RV の単位が異なります: iv={iv.name}({iv.unit}) rv={rv.name}({rv.unit})。rv_scale を指定してください。"
            )
        rv = rv.scaled(rv_scale, unit=iv.unit)
    values = mix.w_iv * iv.values + mix.w_rv * rv.values
    return iv.with_values(values, name=name or f"IVRVSRI_{iv.name}")


def ivrvsri_global(indicators: IndicatorSet) -> TimeSeries:
    """全体 IVRVSRI を IVSRI/RVSRI の合成として返す。国別合成の加重和と一致しなければ例外。"""

    mix = indicators.mix
    from_components = indicators.ivsri.with_values(
        mix.w_iv * indicators.ivsri.values + mix.w_rv * indicators.rvsri.values,
        name="IVRVSRI",
    )
    from_countries = weighted_composite(
        [indicators.country[market] for market in indicators.markets],
        indicators.market_weights,
        name="IVRVSRI",
    )
    if not np.array_equal(from_components.missing, from_countries.missing):
        raise InternalConsistencyError("全体 IVRVSRI の欠損位置が2通りの合成で一致しません。")
    observed = ~from_components.missing
    if observed.any():
        difference = float(np.max(np.abs(from_components.values[observed] - from_countries.values[observed])))
        if difference >= COMPOSITION_TOLERANCE:
            raise InternalConsistencyError(
                f"全体 IVRVSRI の2通りの合成が一致しません: max_abs_diff={difference:.3e}"
            )
    return from_components


def build_indicator_set(
    prices: Sequence[TimeSeries],
    ivs: Sequence[TimeSeries],
    caps: Sequence[float],
    markets: Sequence[str],
    mix: MixWeights = MixWeights(),
    rv_params: RVParams = RVParams(),
    rv_scale: float = PERCENT_SCALE,
) -> IndicatorSet:
    """価格系列と IV 指数から指標一式を計算する。

    全市場の価格と IV を共通日付 (積集合) にそろえてから RV を計算する。
    """

    if not (len(prices) == len(ivs) == len(caps) == len(markets)):
        raise ConfigurationError("市場ごとの入力数がそろっていません。")
    logger.info(
        "指標計算開始: markets=%s rv_window=%s annualization=%s rv_scale=%s w_iv=%s",
        list(markets),
        rv_params.window,
        rv_params.annualization,
        rv_scale,
        mix.w_iv,
    )
    aligned = align([*prices, *ivs], "intersect")
    aligned_prices = aligned[: len(markets)]
    aligned_ivs = aligned[len(markets) :]
    weights = cap_weights(caps, markets)

    iv_by_market: dict[str, TimeSeries] = {}
    rv_by_market: dict[str, TimeSeries] = {}
    country: dict[str, TimeSeries] = {}
    for market, price, iv in zip(markets, aligned_prices, aligned_ivs):
        iv_series = iv.renamed(f"IV_{market}")
        rv_series = realized_vol(price, rv_params).scaled(rv_scale, unit=scaled_rv_unit(rv_scale)).renamed(f"RV_{market}")
        if rv_series.unit != iv_series.unit:
            logger.warning(
                "IV と RV の単位が異なるまま合成します: market=%s iv_unit=%s rv_unit=%s",
                market,
                iv_series.unit,
                rv_series.unit,
            )
        iv_by_market[market] = iv_series
        rv_by_market[market] = rv_series
        country[market] = ivrvsri_country(
            iv_series,
            rv_series,
            mix,
            rv_scale=1.0,
            name=f"IVRVSRI_{market}",
        )

    ivsri = weighted_composite([iv_by_market[market] for market in markets], weights, name="IVSRI")
    rvsri = weighted_composite([rv_by_market[market] for market in markets], weights, name="RVSRI")
    indicators = IndicatorSet(
        markets=tuple(markets),
        iv=iv_by_market,
        rv=rv_by_market,
        country=country,
        ivsri=ivsri,
        rvsri=rvsri,
        market_weights=weights,
        mix=mix,
    )
    global_series = ivrvsri_global(indicators)
    logger.info(
        "指標計算完了: dates=%s defined=%s weights=%s",
        len(global_series),
        global_series.non_missing_count(),
        {market: round(weight, 6) for market, weight in weights.as_dict().items()},
    )
    return replace(indicators, ivrvsri=global_series)
