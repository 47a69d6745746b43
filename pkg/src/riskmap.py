"""指標系列を動的な分位点バケットに分類し、色つきリスクマップを作る。

日付 t のバケットは、t で終わる履歴窓 (既定では t 自身を含む) の分位点だけで決まる。
区間は左開き右閉じで、分位点と等しい値は下側のバケットに入る。
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.errors import InsufficientDataError
from src.models import MapAgreement, MapPolicy
from src.series import TimeSeries
from src.utils import quantile

logger = logging.getLogger(__name__)

QUARTILE_COLORS = ("GREEN", "LIGHT GREEN", "ORANGE", "RED")
QUARTILE_LEVELS = ("VERY LOW", "LOW", "HIGH", "VERY HIGH")
COLOR_HEX = {
    "GREEN": "#1a9641",
    "LIGHT GREEN": "#a6d96a",
    "YELLOW": "#ffffbf",
    "ORANGE": "#fdae61",
    "RED": "#d7191c",
}
MISSING_HEX = "#d9d9d9"


def bucket_colors(bucket_count: int) -> tuple[str, ...]:
    """バケット数に応じた色ラベルを返す。"""

    if bucket_count == 4:
        return QUARTILE_COLORS
    if bucket_count == 2:
        return ("GREEN", "RED")
    if bucket_count == 3:
        return ("GREEN", "ORANGE", "RED")
    if bucket_count == 5:
        return ("GREEN", "LIGHT GREEN", "YELLOW", "ORANGE", "RED")
    return tuple(f"LEVEL{index}" for index in range(1, bucket_count + 1))


def bucket_levels(bucket_count: int) -> tuple[str, ...]:
    """バケットのリスク水準ラベル。4分位以外はバケット番号を使う。"""

    if bucket_count == 4:
        return QUARTILE_LEVELS
    return tuple(f"BUCKET {index}" for index in range(1, bucket_count + 1))


@dataclass(frozen=True, eq=False)
class RiskMap:
    """日付ごとのバケット (1..breakpoints+1、warmup 中は None)。"""

    name: str
    dates: tuple
    values: np.ndarray
    buckets: tuple[int | None, ...]
    policy: MapPolicy

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def bucket_count(self) -> int:
        return self.policy.bucket_count

    @property
    def colors(self) -> tuple[str | None, ...]:
        palette = bucket_colors(self.bucket_count)
        return tuple(None if bucket is None else palette[bucket - 1] for bucket in self.buckets)

    @property
    def levels(self) -> tuple[str | None, ...]:
        labels = bucket_levels(self.bucket_count)
        return tuple(None if bucket is None else labels[bucket - 1] for bucket in self.buckets)

    def classified_count(self) -> int:
        return sum(1 for bucket in self.buckets if bucket is not None)


def assign_bucket(value: float, breakpoints: Sequence[float]) -> int:
    """値 v を (q_{k-1}, q_k] 区間の番号 k に割り当てる。"""

    return 1 + sum(1 for point in breakpoints if value > point)


def history_breakpoints(values: np.ndarray, policy: MapPolicy) -> np.ndarray:
    """日付ごとの履歴窓の分位点を (日付数, 分位点数) で返す。有効値が warmup 未満の日付は NaN。"""

    series = pd.Series(values, dtype=float)
    if policy.window == "full_sample":
        observed = series.dropna().to_numpy()
        points = np.full((series.size, len(policy.breakpoints)), np.nan)
        if observed.size >= policy.warmup:
            points[:] = [quantile(observed, probability) for probability in policy.breakpoints]
        return points

    history = series.shift(1) if policy.exclude_current else series
    if policy.window == "rolling":
        window = history.rolling(policy.rolling_days, min_periods=policy.warmup)
    else:
        window = history.expanding(min_periods=policy.warmup)
    columns = [window.quantile(probability, interpolation="linear").to_numpy() for probability in policy.breakpoints]
    return np.column_stack(columns)


def classify(indicator: TimeSeries, policy: MapPolicy = MapPolicy()) -> RiskMap:
    """各日付の値を履歴窓の分位点でバケットに分類する。"""

    values = indicator.values
    points = history_breakpoints(values, policy)
    ready = ~np.isnan(values) & ~np.isnan(points).any(axis=1)
    with np.errstate(invalid="ignore"):
        codes = 1 + (values[:, np.newaxis] > points).sum(axis=1)
    buckets = [int(code) if flag else None for code, flag in zip(codes, ready)]
    degenerate_dates = int(np.count_nonzero(ready & (points[:, 0] == points[:, -1])))

    if degenerate_dates:
        logger.warning(
            "履歴窓が定数のため分位点が一致した日付があります: series=%s dates=%s policy=%s",
            indicator.name,
            degenerate_dates,
            policy.describe(),
        )
    classified = sum(1 for bucket in buckets if bucket is not None)
    if classified == 0:
        logger.warning(
            "warmup 期間を超える日付がないため分類結果が空です: series=%s observations=%s warmup=%s",
            indicator.name,
            indicator.non_missing_count(),
            policy.warmup,
        )
    return RiskMap(
        name=indicator.name,
        dates=indicator.dates,
        values=indicator.values,
        buckets=tuple(buckets),
        policy=policy,
    )


def occupancy(risk_map: RiskMap) -> dict[int, float]:
    """分類済み日付に占める各バケットの割合を返す。"""

    classified = [bucket for bucket in risk_map.buckets if bucket is not None]
    if not classified:
        raise InsufficientDataError(f"分類済みの日付がありません: series={risk_map.name}")
    total = len(classified)
    return {bucket: classified.count(bucket) / total for bucket in range(1, risk_map.bucket_count + 1)}


def compare_maps(base: RiskMap, other: RiskMap, label: str | None = None) -> MapAgreement:
    """両方で分類済みの日付について、バケット一致率と平均絶対差を返す。"""

    other_by_date = dict(zip(other.dates, other.buckets))
    pairs = [
        (bucket, other_by_date[day])
        for day, bucket in zip(base.dates, base.buckets)
        if bucket is not None and other_by_date.get(day) is not None
    ]
    if not pairs:
        return MapAgreement(label=label or other.policy.describe(), compared_dates=0)
    differences = np.array([abs(left - right) for left, right in pairs], dtype=float)
    return MapAgreement(
        label=label or other.policy.describe(),
        compared_dates=len(pairs),
        agreement=float(np.mean(differences == 0)),
        mean_abs_bucket_diff=float(np.mean(differences)),
    )


def sensitivity(indicator: TimeSeries, base_policy: MapPolicy, variants: Sequence[MapPolicy]) -> list[MapAgreement]:
    """代替設定で作ったリスクマップを基準マップと比較する。"""

    base_map = classify(indicator, base_policy)
    results: list[MapAgreement] = []
    for variant in variants:
        agreement = compare_maps(base_map, classify(indicator, variant))
        logger.info(
            "リスクマップ感応度: series=%s variant=%s agreement=%s",
            indicator.name,
            agreement.label,
            agreement.agreement,
        )
        results.append(agreement)
    return results
