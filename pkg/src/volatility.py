"""実現ボラティリティと、オプションチェーンからのモデルフリー・インプライド分散の計算。"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.errors import ConfigurationError, DegenerateChainError, DomainError
from src.series import TimeSeries, check_positive

DEFAULT_RV_WINDOW = 21
DEFAULT_ANNUALIZATION = 252.0
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RVParams:
    """実現ボラティリティの窓長 (取引日) と年率化係数。"""

    window: int = DEFAULT_RV_WINDOW
    annualization: float = DEFAULT_ANNUALIZATION

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ConfigurationError(f"RV の window には2以上を指定してください: {self.window}")
        if not self.annualization > 0:
            raise ConfigurationError(f"annualization には正の値を指定してください: {self.annualization}")


@dataclass(frozen=True, eq=False)
class OptionChainSlice:
    """単一満期のアウト・オブ・ザ・マネー・オプション気配。"""

    expiry_fraction: float
    risk_free: float
    forward: float
    strikes: tuple[float, ...]
    quotes: tuple[float, ...]
    k0: int

    def __post_init__(self) -> None:
        if not self.expiry_fraction > 0:
            raise DomainError(f"満期までの年数 T は正の値が必要です: T={self.expiry_fraction}")
        if not self.forward > 0:
            raise DomainError(f"フォワード F は正の値が必要です: F={self.forward}")
        if not self.strikes:
            raise ConfigurationError("オプションチェーンに行使価格が1つもありません。")
        if len(self.strikes) != len(self.quotes):
            raise ConfigurationError(
                f"行使価格と気配の数が一致しません: strikes={len(self.strikes)} quotes={len(self.quotes)}"
            )
        if any(strike <= 0 for strike in self.strikes):
            raise DomainError("行使価格は正の値が必要です。")
        if any(later <= earlier for earlier, later in zip(self.strikes, self.strikes[1:])):
            raise ConfigurationError("行使価格は狭義単調増加で並べてください。")
        if any(quote < 0 for quote in self.quotes):
            raise DomainError("オプション気配は0以上が必要です。")
        if not 0 <= self.k0 < len(self.strikes) or self.strikes[self.k0] > self.forward:
            raise ConfigurationError(f"k0 が F 以下の行使価格を指していません: k0={self.k0} F={self.forward}")

    @classmethod
    def from_chain(
        cls,
        strikes: Sequence[float],
        quotes: Sequence[float],
        expiry_fraction: float,
        risk_free: float,
        forward: float,
    ) -> OptionChainSlice:
        """F 以下で最大の行使価格を K0 として選んだスライスを作る。"""

        eligible = [index for index, strike in enumerate(strikes) if strike <= forward]
        if not eligible:
            raise ConfigurationError(f"F 以下の行使価格がありません: F={forward}")
        return cls(
            expiry_fraction=expiry_fraction,
            risk_free=risk_free,
            forward=forward,
            strikes=tuple(float(strike) for strike in strikes),
            quotes=tuple(float(quote) for quote in quotes),
            k0=eligible[-1],
        )


def realized_vol(prices: TimeSeries, params: RVParams = RVParams()) -> TimeSeries:
    """直近 window 日の日次対数リターン二乗和から年率 RV (小数表記) を計算する。

    日付 t の値は t を含む過去 window 本のリターンだけを使う。窓が欠けている日付は欠損。
    """

    check_positive(prices, "実現ボラティリティ")
    values = np.full(len(prices), np.nan)
    if len(prices) > params.window:
        log_prices = np.log(prices.values)
        returns = np.diff(log_prices)
        windows = sliding_window_view(returns**2, params.window)
        # windows[j] は価格インデックス j + window で終わるリターン
        values[params.window :] = np.sqrt(params.annualization / params.window * windows.sum(axis=1))
    else:
        logger.info(
            "RV の窓に満たないため全日付を欠損にします: series=%s length=%s window=%s",
            prices.name,
            len(prices),
            params.window,
        )
    return prices.with_values(values, name=f"RV_{prices.name}", unit="decimal")


def strike_increments(strikes: Sequence[float]) -> np.ndarray:
    """各行使価格の ΔK。内側は両隣の差の半分、端は片側の差。"""

    array = np.asarray(strikes, dtype=float)
    if array.size == 1:
        return np.zeros(1)
    increments = np.empty_like(array)
    increments[0] = array[1] - array[0]
    increments[-1] = array[-1] - array[-2]
    if array.size > 2:
        increments[1:-1] = (array[2:] - array[:-2]) / 2.0
    return increments


def implied_variance(chain: OptionChainSlice) -> float:
    """年率インプライド分散 σ² を返す。負になってもそのまま返す。"""

    strikes = np.asarray(chain.strikes, dtype=float)
    quotes = np.asarray(chain.quotes, dtype=float)
    increments = strike_increments(strikes)
    if strikes.size == 1 and quotes[0] > 0:
        logger.warning(
            "行使価格が1つのため ΔK が定まらず、気配を分散に含めません: strike=%s quote=%s",
            strikes[0],
            quotes[0],
        )
    growth = math.exp(chain.risk_free * chain.expiry_fraction)
    strip = float(np.sum(increments / strikes**2 * quotes)) * growth * 2.0 / chain.expiry_fraction
    forward_term = (chain.forward / chain.strikes[chain.k0] - 1.0) ** 2 / chain.expiry_fraction
    return strip - forward_term


def implied_variance_index(chain: OptionChainSlice) -> float:
    """インプライド分散からボラティリティ指数水準 (パーセントポイント) を返す。"""

    variance = implied_variance(chain)
    if variance < 0:
        raise DegenerateChainError(
            f"インプライド分散が負になりました。気配がフォワードと整合しません: sigma2={variance:.6g} F={chain.forward}"
        )
    return 100.0 * math.sqrt(variance)
