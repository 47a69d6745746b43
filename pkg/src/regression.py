"""指標の週次リターンによる対象指数リターンの予測力評価。

ラグ付き計画行列、OLS、擬似分位点 OLS (閾値未満の行だけで推定)、
ピンボール損失を線形計画で最小化する分位点回帰、自由度調整済み R² と擬似 R² を扱う。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
from scipy import linalg
from scipy.optimize import linprog

from src.errors import (
    ConfigurationError,
    DomainError,
    InsufficientDataError,
    NestingViolationError,
    SingularDesignError,
    SolverError,
)
from src.models import BatteryDocument, BatteryEntry, DroppedRow, RegressionConfig, RegressionReport
from src.series import ReturnSeries, TimeSeries, align, compute_returns
from src.utils import quantile, round_significant

INTERCEPT_LABEL = "const"
JOINT_SET_LABEL = "joint"
FULL_SAMPLE_LABEL = "all"
EXTRA_ROWS_REQUIRED = 2
FACET_OBJECTIVE_SLACK = 1e-10
NESTING_TOLERANCE = 1e-9
DUAL_BOUND_TOLERANCE = 1e-9
logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LaggedDesign:
    """応答ベクトルとラグ付き説明変数の計画行列。"""

    y: np.ndarray
    X: np.ndarray
    lags: int
    row_dates: tuple
    predictor_labels: tuple[str, ...]
    column_labels: tuple[str, ...]
    rows_before_filter: int
    dropped: tuple[tuple[object, str], ...] = field(default=(), repr=False)

    @property
    def n_rows(self) -> int:
        return int(self.y.size)

    @property
    def n_columns(self) -> int:
        return int(self.X.shape[1])

    def subset(self, mask: np.ndarray) -> LaggedDesign:
        """行マスクで絞り込んだ計画を返す。"""

        return LaggedDesign(
            y=self.y[mask],
            X=self.X[mask],
            lags=self.lags,
            row_dates=tuple(day for day, keep in zip(self.row_dates, mask) if keep),
            predictor_labels=self.predictor_labels,
            column_labels=self.column_labels,
            rows_before_filter=self.rows_before_filter,
            dropped=self.dropped,
        )

    def dropped_rows(self, stage: str) -> list[DroppedRow]:
        return [DroppedRow(stage=stage, date=str(day), reason=reason) for day, reason in self.dropped]


def _values(series: ReturnSeries | TimeSeries) -> np.ndarray:
    return np.asarray(series.values, dtype=float)


def build_design(
    y: ReturnSeries | TimeSeries,
    predictors: Sequence[ReturnSeries | TimeSeries],
    p: int,
) -> LaggedDesign:
    """y_t と各説明変数のラグ 1..p (観測ステップ単位) を並べた計画行列を作る。"""

    if p < 1:
        raise ConfigurationError(f"lags には1以上を指定してください: {p}")
    if not predictors:
        raise ConfigurationError("説明変数が1つもありません。")
    for predictor in predictors:
        if predictor.dates != y.dates:
            raise ConfigurationError(
                f"応答と説明変数の日付インデックスが一致しません: y={y.name} predictor={predictor.name}"
            )

    response = _values(y)
    size = response.size
    columns = [np.ones(max(size - p, 0))]
    labels = [INTERCEPT_LABEL]
    for predictor in predictors:
        values = _values(predictor)
        for lag in range(1, p + 1):
            columns.append(values[p - lag : size - lag])
            labels.append(f"{predictor.name}_L{lag}")
    X = np.column_stack(columns) if size > p else np.empty((0, len(labels)))
    target = response[p:]
    row_dates = tuple(y.dates[p:])

    complete = ~(np.isnan(target) | np.isnan(X).any(axis=1))
    dropped: list[tuple[object, str]] = []
    for day, is_complete, row, value in zip(row_dates, complete, X, target):
        if is_complete:
            continue
        missing = [label for label, cell in zip(labels, row) if math.isnan(cell)]
        if math.isnan(value):
            missing.insert(0, y.name or "y")
        reason = "欠損: " + ",".join(missing)
        dropped.append((day, reason))
        logger.debug("計画行列から行を除外: date=%s reason=%s", day, reason)
    if dropped:
        logger.info("欠損のため計画行列から行を除外しました: y=%s dropped=%s", y.name, len(dropped))

    required = len(labels) + EXTRA_ROWS_REQUIRED
    rows_after = int(np.count_nonzero(complete))
    if rows_after < required:
        raise InsufficientDataError(
            f"計画行列の完全な行が足りません: y={y.name} rows={rows_after} required={required} columns={len(labels)}"
        )
    return LaggedDesign(
        y=target[complete],
        X=X[complete],
        lags=p,
        row_dates=tuple(day for day, keep in zip(row_dates, complete) if keep),
        predictor_labels=tuple(predictor.name for predictor in predictors),
        column_labels=tuple(labels),
        rows_before_filter=int(target.size),
        dropped=tuple(dropped),
    )


def _check_rank(design: LaggedDesign) -> None:
    """ピボット付き QR でランク落ちを検出し、従属する列名を例外に含める。"""

    _, r, pivots = linalg.qr(design.X, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r))
    if diagonal.size == 0 or diagonal[0] == 0.0:
        raise SingularDesignError(
            "計画行列がゼロ行列です。", collinear_columns=design.column_labels
        )
    tolerance = max(design.X.shape) * np.finfo(float).eps * diagonal[0]
    rank = int(np.count_nonzero(diagonal > tolerance))
    if rank < design.n_columns:
        collinear = tuple(design.column_labels[index] for index in pivots[rank:])
        raise SingularDesignError(
            f"計画行列がフルランクではありません: rank={rank} columns={design.n_columns} collinear={list(collinear)}",
            collinear_columns=collinear,
        )


def adjusted_r2(r2: float, n: int, p: int) -> float:
    """1 - (1-R²)(n-1)/(n-p-1)。p は切片を除く説明変数の数。"""

    if n <= p + 1:
        raise DomainError(f"自由度調整済み R² には n > p + 1 が必要です: n={n} p={p}")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


def ols(design: LaggedDesign) -> RegressionReport:
    """最小二乗推定。自由度調整済み R² を適合度として返す。"""

    if design.n_rows <= design.n_columns:
        raise InsufficientDataError(
            f"OLS に必要な行数がありません: rows={design.n_rows} columns={design.n_columns}"
        )
    _check_rank(design)
    coefficients, _, _, _ = linalg.lstsq(design.X, design.y)
    residuals = design.y - design.X @ coefficients
    ssr = float(residuals @ residuals)
    centered = design.y - np.mean(design.y)
    sst = float(centered @ centered)
    if sst == 0.0:
        r2 = 1.0 if ssr == 0.0 else 0.0
    else:
        r2 = 1.0 - ssr / sst
    fit = adjusted_r2(r2, design.n_rows, design.n_columns - 1)
    logger.debug("OLS 推定完了: rows=%s columns=%s r2=%s", design.n_rows, design.n_columns, r2)
    return RegressionReport(
        model_kind="ols",
        coefficients={label: float(value) for label, value in zip(design.column_labels, coefficients)},
        n_obs=design.n_rows,
        fit_kind="adjusted_r2",
        fit=fit,
        r2=r2,
        objective=ssr,
        lags=design.lags,
        predictor_labels=list(design.predictor_labels),
        rows_before_filter=design.rows_before_filter,
        rows_after_filter=design.n_rows,
    )


def parse_threshold(label: str) -> float | None:
    """閾値表記の確率を返す。`mean` と `inf` は None。

    `P25` は 0.25、`P05` は 0.05、`P025` は 0.025 のように数字列を小数部として読む。
    """

    if label in {"mean", "inf"}:
        return None
    digits = label[1:]
    if not (label.startswith("P") and digits.isdigit()):
        raise ConfigurationError(f"閾値は mean / inf / P<数字> で指定してください: {label}")
    probability = int(digits) / 10 ** len(digits)
    if not 0.0 < probability < 1.0:
        raise ConfigurationError(f"閾値の分位点は (0,1) で指定してください: {label}")
    return probability


def threshold_value(label: str | float, y: np.ndarray) -> float:
    """閾値表記を全標本の y に対する数値に変換する。"""

    if not isinstance(label, str):
        return float(label)
    if label == "inf":
        return math.inf
    if label == "mean":
        return float(np.mean(y))
    probability = parse_threshold(label)
    return quantile(y, probability)


def quasi_quantile_ols(design: LaggedDesign, threshold: str | float) -> RegressionReport:
    """y が閾値未満の行だけで OLS を推定する。閾値は全標本の y から計算する。"""

    value = threshold_value(threshold, design.y)
    label = threshold if isinstance(threshold, str) else format(value, "g")
    mask = design.y < value
    kept = int(np.count_nonzero(mask))
    if kept == design.n_rows:
        filtered = design
    else:
        filtered = design.subset(mask)
    if kept <= design.n_columns:
        raise InsufficientDataError(
            f"閾値で絞り込んだ行が足りません: threshold={label} value={value} "
            f"rows_before={design.n_rows} rows_after={kept} columns={design.n_columns}"
        )
    report = ols(filtered)
    logger.debug("擬似分位点 OLS 推定完了: threshold=%s rows=%s/%s", label, kept, design.n_rows)
    return report.model_copy(
        update={
            "model_kind": "quasi_quantile",
            "threshold_label": label,
            "threshold_value": value,
            "rows_before_filter": design.n_rows,
            "rows_after_filter": kept,
        }
    )


def pinball_loss(residuals: np.ndarray, tau: float) -> float:
    """Σ ρ_τ(u)、ρ_τ(u) = u (τ - 1{u<0})。"""

    values = np.asarray(residuals, dtype=float)
    return float(np.sum(values * (tau - (values < 0))))


def pseudo_r2(v_full: float, v_restricted: float) -> float:
    """1 - V̂/Ṽ。"""

    if not v_restricted > 0:
        raise DomainError(f"制約付きモデルの目的関数値は正である必要があります: v_restricted={v_restricted}")
    if v_full > v_restricted:
        raise NestingViolationError(
            f"完全モデルの目的関数値が制約付きモデルを上回りました: v_full={v_full} v_restricted={v_restricted}"
        )
    return 1.0 - max(v_full, 0.0) / v_restricted


def restricted_objective(y: np.ndarray, tau: float) -> float:
    """切片のみモデルの最小ピンボール損失。最小値は順序統計量 y_(ceil(nτ)) で達成される。"""

    ordered = np.sort(np.asarray(y, dtype=float))
    n = ordered.size
    center = max(math.ceil(n * tau) - 1, 0)
    candidates = ordered[max(center - 1, 0) : min(center + 2, n)]
    return min(pinball_loss(ordered - candidate, tau) for candidate in candidates)


def _quantile_program(design: LaggedDesign, tau: float) -> tuple[np.ndarray, sparse.csr_matrix, list]:
    n, m = design.X.shape
    costs = np.concatenate([np.zeros(m), np.full(n, tau), np.full(n, 1.0 - tau)])
    identity = sparse.identity(n, format="csr")
    constraints = sparse.hstack([sparse.csr_matrix(design.X), identity, -identity], format="csr")
    bounds = [(None, None)] * m + [(0, None)] * (2 * n)
    return costs, constraints, bounds


def _solve(costs: np.ndarray, constraints: sparse.csr_matrix, y: np.ndarray, bounds: list, **kwargs):
    result = linprog(costs, A_eq=constraints, b_eq=y, bounds=bounds, method="highs", **kwargs)
    if not result.success:
        best = float(result.fun) if result.fun is not None else None
        raise SolverError(
            f"分位点回帰の線形計画が解けませんでした: status={result.status} message={result.message}",
            best_objective=best,
            gap=None,
        )
    return result


def _optimum_is_unique(result, residuals: np.ndarray, tau: float, m: int) -> bool:
    """補間点の双対変数がすべて (τ-1, τ) の内部なら最適解は一意。"""

    marginals = getattr(getattr(result, "eqlin", None), "marginals", None)
    if marginals is None:
        return False
    scale = max(float(np.max(np.abs(residuals))), 1.0)
    interpolated = np.abs(residuals) <= DUAL_BOUND_TOLERANCE * scale
    if np.count_nonzero(interpolated) < m:
        return False
    duals = np.asarray(marginals, dtype=float)[interpolated]
    lower, upper = tau - 1.0 + DUAL_BOUND_TOLERANCE, tau - DUAL_BOUND_TOLERANCE
    return bool(np.all((duals > lower) & (duals < upper)))


def _facet_midpoint(design: LaggedDesign, tau: float, objective: float) -> np.ndarray:
    """最適面上で各係数を最小化・最大化した頂点の平均を返す。"""

    costs, constraints, bounds = _quantile_program(design, tau)
    m = design.n_columns
    limit = objective * (1.0 + FACET_OBJECTIVE_SLACK) + FACET_OBJECTIVE_SLACK
    vertices = []
    for column in range(m):
        for sign in (1.0, -1.0):
            direction = np.zeros_like(costs)
            direction[column] = sign
            result = _solve(
                direction,
                constraints,
                design.y,
                bounds,
                A_ub=sparse.csr_matrix(costs.reshape(1, -1)),
                b_ub=np.array([limit]),
            )
            vertices.append(result.x[:m])
    return np.mean(vertices, axis=0)


def quantile_regression(
    design: LaggedDesign,
    tau: float,
    tie_break: str = "midpoint",
) -> RegressionReport:
    """ピンボール損失を最小化する係数と擬似 R² を返す。

    最小化解が一意でない場合、tie_break="midpoint" は最適面の中点、"vertex" はソルバーの頂点解を返す。
    """

    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau は (0,1) で指定してください: {tau}")
    if tie_break not in {"midpoint", "vertex"}:
        raise ConfigurationError(f"未対応の tie_break です: {tie_break}")
    if design.n_rows <= design.n_columns:
        raise InsufficientDataError(
            f"分位点回帰に必要な行数がありません: rows={design.n_rows} columns={design.n_columns}"
        )
    _check_rank(design)

    costs, constraints, bounds = _quantile_program(design, tau)
    result = _solve(costs, constraints, design.y, bounds)
    m = design.n_columns
    coefficients = np.asarray(result.x[:m], dtype=float)
    residuals = design.y - design.X @ coefficients
    objective = pinball_loss(residuals, tau)

    if tie_break == "midpoint" and not _optimum_is_unique(result, residuals, tau, m):
        midpoint = _facet_midpoint(design, tau, objective)
        midpoint_objective = pinball_loss(design.y - design.X @ midpoint, tau)
        if midpoint_objective <= objective * (1.0 + FACET_OBJECTIVE_SLACK) + FACET_OBJECTIVE_SLACK:
            coefficients = midpoint
            objective = midpoint_objective

    v_restricted = restricted_objective(design.y, tau)
    if objective > v_restricted:
        if objective - v_restricted <= NESTING_TOLERANCE * max(v_restricted, 1.0):
            objective = v_restricted
        else:
            raise NestingViolationError(
                f"分位点回帰の目的関数値が切片のみモデルを上回りました: v_full={objective} v_restricted={v_restricted}"
            )
    fit = pseudo_r2(objective, v_restricted) if v_restricted > 0 else 0.0
    logger.debug("分位点回帰推定完了: tau=%s rows=%s objective=%s pseudo_r2=%s", tau, design.n_rows, objective, fit)
    return RegressionReport(
        model_kind="quantile",
        coefficients={label: float(value) for label, value in zip(design.column_labels, coefficients)},
        n_obs=design.n_rows,
        fit_kind="pseudo_r2",
        fit=fit,
        objective=objective,
        restricted_objective=v_restricted,
        lags=design.lags,
        predictor_labels=list(design.predictor_labels),
        tau=tau,
        rows_before_filter=design.rows_before_filter,
        rows_after_filter=design.n_rows,
    )


def _entry_from_report(
    report: RegressionReport,
    predictor_set: str,
    threshold_or_tau: str,
    overlap: bool,
) -> BatteryEntry:
    return BatteryEntry(
        model_kind=report.model_kind,
        predictor_set=predictor_set,
        lag_depth=report.lags,
        threshold_or_tau=threshold_or_tau,
        overlap=overlap,
        coefficients={label: round_significant(value) for label, value in report.coefficients.items()},
        n_obs=report.n_obs,
        fit=round_significant(report.fit),
        fit_kind=report.fit_kind,
        threshold_value=round_significant(report.threshold_value),
    )


def predictor_sets(names: Sequence[str]) -> list[tuple[str, tuple[str, ...]]]:
    """単独の各指標と、2つ以上あれば全指標同時の説明変数セットを返す。"""

    sets = [(name, (name,)) for name in names]
    if len(names) > 1:
        sets.append((JOINT_SET_LABEL, tuple(names)))
    return sets


def format_tau(tau: float) -> str:
    return format(tau, "g")


@dataclass
class BatteryResult:
    """回帰バッテリーの出力文書と、除外行の記録。"""

    document: BatteryDocument
    dropped_rows: list[DroppedRow]
    row_counts: dict[str, int]


def run_battery(
    target: TimeSeries,
    predictors: Mapping[str, TimeSeries],
    config: RegressionConfig,
) -> BatteryResult:
    """モデル・説明変数セット・ラグ・閾値/τ・重複有無の全組み合わせで回帰を実行する。

    行数不足の実行は status=insufficient_data として記録し、段全体は失敗させない。
    """

    if not predictors:
        raise ConfigurationError("回帰バッテリーの説明変数が1つもありません。")
    names = list(predictors)
    lag_depths = sorted({1, config.lags})
    entries: dict[str, BatteryEntry] = {}
    dropped: list[DroppedRow] = []
    row_counts: dict[str, int] = {}

    def record(entry: BatteryEntry) -> None:
        entries[entry.key] = entry

    def insufficient(kind: str, set_label: str, lag: int, label: str, overlap: bool, message: str) -> None:
        logger.warning(
            "行数不足のため回帰を省略します: model=%s set=%s lag=%s threshold_or_tau=%s overlap=%s",
            kind,
            set_label,
            lag,
            label,
            overlap,
        )
        record(
            BatteryEntry(
                model_kind=kind,
                predictor_set=set_label,
                lag_depth=lag,
                threshold_or_tau=label,
                overlap=overlap,
                status="insufficient_data",
                message=message,
            )
        )

    # 重複なしの抽出は全系列で同じ開始日にそろえる
    levels = align([target, *(series.renamed(name) for name, series in predictors.items())], "intersect")
    for overlap in config.overlap_modes():
        mode = "overlap" if overlap else "nonoverlap"
        returns = [compute_returns(series, config.return_kind, config.horizon, overlap).base for series in levels]
        response, columns = returns[0], dict(zip(names, returns[1:]))
        row_counts[f"returns_{mode}"] = len(response)
        logger.info(
            "回帰バッテリー開始: target=%s overlap=%s rows=%s predictors=%s lags=%s",
            target.name,
            overlap,
            len(response),
            names,
            lag_depths,
        )

        for set_label, members in predictor_sets(names):
            for lag in lag_depths:
                labels = [
                    ("ols", FULL_SAMPLE_LABEL),
                    *(("quasi_quantile", threshold) for threshold in config.thresholds),
                    *(("quantile", format_tau(tau)) for tau in config.taus),
                ]
                try:
                    design = build_design(response, [columns[name] for name in members], lag)
                except InsufficientDataError as exc:
                    for kind, label in labels:
                        insufficient(kind, set_label, lag, label, overlap, exc.message)
                    continue
                dropped.extend(design.dropped_rows(f"evaluate:{mode}:{set_label}:L{lag}"))
                row_counts[f"design_{mode}_{set_label}_L{lag}"] = design.n_rows

                try:
                    record(_entry_from_report(ols(design), set_label, FULL_SAMPLE_LABEL, overlap))
                except InsufficientDataError as exc:
                    insufficient("ols", set_label, lag, FULL_SAMPLE_LABEL, overlap, exc.message)
                for threshold in config.thresholds:
                    try:
                        report = quasi_quantile_ols(design, threshold)
                    except (InsufficientDataError, SingularDesignError) as exc:
                        insufficient("quasi_quantile", set_label, lag, threshold, overlap, exc.message)
                        continue
                    record(_entry_from_report(report, set_label, threshold, overlap))
                for tau in config.taus:
                    label = format_tau(tau)
                    try:
                        report = quantile_regression(design, tau, config.tie_break)
                    except InsufficientDataError as exc:
                        insufficient("quantile", set_label, lag, label, overlap, exc.message)
                        continue
                    record(_entry_from_report(report, set_label, label, overlap))

    completed = sum(1 for entry in entries.values() if entry.status == "ok")
    logger.info("回帰バッテリー完了: entries=%s ok=%s", len(entries), completed)
    document = BatteryDocument(
        target=target.name,
        horizon=config.horizon,
        return_kind=config.return_kind,
        lags=config.lags,
        entries=entries,
    )
    return BatteryResult(document=document, dropped_rows=dropped, row_counts=row_counts)
