"""乱数シードで再現できる合成データの生成。

テストとサンプル実行用。実データの代わりに、ボラティリティの局面が切り替わる株価指数と
それに連動するボラティリティ指数、ベンチマーク入力の簡易版を作る。
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np
import pandas as pd

from src.series import TimeSeries

DEFAULT_MARKETS = ("US", "EU", "JP", "BR")
DEFAULT_CAPS = (35.6, 3.7, 5.5, 1.0)
DEFAULT_START = date(2005, 1, 3)
TAIL_THRESHOLD = 1.28


@dataclass(frozen=True, eq=False)
class SyntheticMarket:
    """1市場分の合成価格と合成ボラティリティ指数。"""

    name: str
    cap: float
    prices: TimeSeries
    iv: TimeSeries


def business_dates(n_days: int, start: date = DEFAULT_START) -> tuple[date, ...]:
    return tuple(day.date() for day in pd.bdate_range(start=start, periods=n_days))


def volatility_regimes(rng: np.random.Generator, n_days: int, calm: float = 0.12, stressed: float = 0.35) -> np.ndarray:
    """平穏と緊張の2局面を持つ年率ボラティリティ経路。"""

    state = 0
    path = np.empty(n_days)
    for index in range(n_days):
        if state == 0 and rng.random() < 0.01:
            state = 1
        elif state == 1 and rng.random() < 0.04:
            state = 0
        path[index] = stressed if state else calm
    return path


def synthetic_markets(
    seed: int,
    n_days: int = 600,
    markets: tuple[str, ...] = DEFAULT_MARKETS,
    caps: tuple[float, ...] = DEFAULT_CAPS,
) -> list[SyntheticMarket]:
    """共通のストレス局面に連動する複数市場の価格と IV 指数 (パーセント表記) を作る。"""

    rng = np.random.default_rng(seed)
    dates = business_dates(n_days)
    common = volatility_regimes(rng, n_days)
    result: list[SyntheticMarket] = []
    for name, cap in zip(markets, caps):
        local = common * rng.uniform(0.8, 1.3)
        shocks = rng.standard_normal(n_days) * local / np.sqrt(252.0)
        shocks[0] = 0.0
        prices = 100.0 * np.exp(np.cumsum(shocks - 0.5 * (local / np.sqrt(252.0)) ** 2))
        iv = 100.0 * local * 1.1 + rng.normal(0.0, 0.8, n_days)
        result.append(
            SyntheticMarket(
                name=name,
                cap=cap,
                prices=TimeSeries(dates, prices, name=name, unit="level"),
                iv=TimeSeries(dates, np.maximum(iv, 1.0), name=name, unit="percent"),
            )
        )
    return result


def regime_switching_returns(
    seed: int,
    n: int = 500,
    shock: float = 0.05,
    noise: float = 0.01,
) -> tuple[np.ndarray, np.ndarray]:
    """説明変数の前期の大きな値が、応答の下側の裾だけを押し下げる系列 (y, x) を返す。

    x_t は i.i.d. 標準正規、y_t = noise * e_t - shock * max(x_{t-1} - 1.28, 0)。
    """

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = noise * rng.standard_normal(n)
    y[1:] -= shock * np.maximum(x[:-1] - TAIL_THRESHOLD, 0.0)
    return y, x


def distance_to_default_panel(seed: int, dates: tuple[date, ...], banks: int = 5) -> tuple[list[TimeSeries], TimeSeries]:
    """銀行別 DD と PDD の合成パネル。途中に ADD と PDD が接近する期間を含む。"""

    rng = np.random.default_rng(seed)
    size = len(dates)
    base = 3.0 + np.cumsum(rng.normal(0.0, 0.05, size))
    panel = [
        TimeSeries(dates, base + rng.normal(0.0, 0.2, size), name=f"bank{index + 1}", unit="dd")
        for index in range(banks)
    ]
    spread = np.full(size, 1.0)
    stress = slice(size // 2, size // 2 + 30)
    spread[stress] = 0.05
    pdd = TimeSeries(dates, base - spread, name="pdd", unit="dd")
    return panel, pdd


def level_series(seed: int, dates: tuple[date, ...], name: str, start: float = 100.0, scale: float = 0.01) -> TimeSeries:
    """正値のランダムウォーク水準系列。"""

    rng = np.random.default_rng(seed)
    values = start * np.exp(np.cumsum(rng.normal(0.0, scale, len(dates))))
    return TimeSeries(dates, values, name=name, unit="level")
