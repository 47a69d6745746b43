"""設定、統計レポート、回帰結果、実行記録の構造を定義する Pydantic モデル群。"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

BATTERY_SCHEMA_VERSION = 1
ENGINE_VERSION = "0.1.0"
DEFAULT_THRESHOLDS = ["mean", "P25", "P10", "P05", "P025", "P01"]
DEFAULT_TAUS = [0.5, 0.25, 0.1, 0.05, 0.025, 0.01]


class MarketConfig(BaseModel):
    """1市場分の入力ファイルと時価総額。"""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    price_csv: Path
    iv_csv: Path
    cap: float = Field(gt=0)
    price_column: str | None = None
    iv_column: str | None = None


class MapPolicy(BaseModel):
    """リスクマップの分位点と履歴窓の設定。"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    breakpoints: tuple[float, ...] = (0.25, 0.5, 0.75)
    window: Literal["expanding", "rolling", "full_sample"] = "expanding"
    rolling_days: int | None = None
    warmup: int = Field(default=252, ge=2)
    exclude_current: bool = False

    @field_validator("breakpoints")
    @classmethod
    def check_breakpoints(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        """分位点が (0,1) 内で狭義単調増加かを検証する。"""

        if not value:
            raise ValueError("breakpoints には1つ以上の確率を指定してください。")
        if any(not 0.0 < point < 1.0 for point in value):
            raise ValueError(f"breakpoints は (0,1) の範囲で指定してください: {value}")
        if any(later <= earlier for earlier, later in zip(value, value[1:])):
            raise ValueError(f"breakpoints は狭義単調増加で指定してください: {value}")
        return value

    @model_validator(mode="after")
    def check_rolling(self) -> MapPolicy:
        """rolling 窓の長さが warmup 以上かを検証する。"""

        if self.window == "rolling":
            if self.rolling_days is None:
                raise ValueError("window=rolling には rolling_days が必要です。")
            if self.rolling_days < self.warmup:
                raise ValueError(
                    f"rolling_days は warmup 以上にしてください: rolling_days={self.rolling_days} warmup={self.warmup}"
                )
        return self

    @property
    def bucket_count(self) -> int:
        return len(self.breakpoints) + 1

    def describe(self) -> str:
        """ログや表見出し向けの短い表記を返す。"""

        window = f"rolling{self.rolling_days}" if self.window == "rolling" else self.window
        points = "/".join(f"{point:g}" for point in self.breakpoints)
        current = "excl" if self.exclude_current else "incl"
        return f"{window}:warmup{self.warmup}:{points}:{current}"


class SensitivityConfig(BaseModel):
    """リスクマップとRV記憶長の感応度分析の設定。"""

    model_config = ConfigDict(extra="forbid")

    policies: list[MapPolicy] = []
    rv_windows: list[int] = []

    @field_validator("rv_windows")
    @classmethod
    def check_rv_windows(cls, value: list[int]) -> list[int]:
        if any(window < 2 for window in value):
            raise ValueError(f"rv_windows は2以上で指定してください: {value}")
        return value


class RiskMapConfig(BaseModel):
    """リスクマップ段の設定。"""

    model_config = ConfigDict(extra="forbid")

    policy: MapPolicy = MapPolicy()
    sensitivity: SensitivityConfig = SensitivityConfig()


class RegressionConfig(BaseModel):
    """予測力評価バッテリーの設定。"""

    model_config = ConfigDict(extra="forbid")

    target: str | None = None
    lags: int = Field(default=5, ge=1)
    horizon: int = Field(default=5, ge=1)
    return_kind: Literal["simple", "log"] = "simple"
    overlap: Literal["on", "off", "both"] = "both"
    thresholds: list[str] = Field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    taus: list[float] = Field(default_factory=lambda: list(DEFAULT_TAUS))
    tie_break: Literal["midpoint", "vertex"] = "midpoint"
    include_indicator: bool = True

    @field_validator("thresholds")
    @classmethod
    def check_thresholds(cls, value: list[str]) -> list[str]:
        """閾値表記が `mean` / `inf` / `P<数字>` のいずれかかを検証する。"""

        for label in value:
            if label in {"mean", "inf"}:
                continue
            if not (label.startswith("P") and label[1:].isdigit()):
                raise ValueError(f"閾値は mean / inf / P<数字> で指定してください: {label}")
        return value

    @field_validator("taus")
    @classmethod
    def check_taus(cls, value: list[float]) -> list[float]:
        if any(not 0.0 < tau < 1.0 for tau in value):
            raise ValueError(f"taus は (0,1) の範囲で指定してください: {value}")
        return value

    def overlap_modes(self) -> list[bool]:
        """重複リターン有無の実行順序を返す。"""

        if self.overlap == "on":
            return [True]
        if self.overlap == "off":
            return [False]
        return [True, False]


class StatsConfig(BaseModel):
    """記述統計・相関段の設定。"""

    model_config = ConfigDict(extra="forbid")

    correlation_lag: int = Field(default=5, ge=0)
    rolling_window: int = Field(default=252, ge=3)


class DistressThresholds(BaseModel):
    """LRMES 推定の前提となるシステミック事象の定義。計算には使わない来歴情報。"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    horizon: int = Field(default=22, ge=1)
    threshold: float = Field(default=-0.10, lt=0)


class BenchmarksConfig(BaseModel):
    """ベンチマーク指標の入力ファイルと定数。"""

    model_config = ConfigDict(extra="forbid")

    srisk_csv: Path | None = None
    catfin_csv: Path | None = None
    ciss_csv: Path | None = None
    cleveland_csv: Path | None = None
    firms_csv: Path | None = None
    firms_k: float = Field(default=0.08, ge=0, lt=1)
    dd_panel_csv: Path | None = None
    pdd_csv: Path | None = None
    extended_days: int = Field(default=20, ge=1)
    var_panel_csv: Path | None = None
    var_confidence: float = Field(default=0.99, gt=0, lt=1)
    catfin_gpd_csv: Path | None = None
    catfin_sged_csv: Path | None = None
    distress: DistressThresholds = DistressThresholds()

    def level_series_paths(self) -> dict[str, Path]:
        """回帰バッテリーに使うベンチマーク水準系列のパスを名前つきで返す。"""

        candidates = {
            "catfin": self.catfin_csv,
            "ciss": self.ciss_csv,
            "srisk": self.srisk_csv,
            "cleveland": self.cleveland_csv,
        }
        return {name: path for name, path in candidates.items() if path is not None}


class EngineConfig(BaseModel):
    """エンジン全体の設定。TOML から読み込む。"""

    model_config = ConfigDict(extra="forbid")

    markets: list[MarketConfig] = Field(min_length=1)
    rv_window: int = Field(default=21, ge=2)
    annualization: float = Field(default=252.0, gt=0)
    rv_scale: float = Field(default=100.0, gt=0)
    w_iv: float = Field(default=0.5, ge=0, le=1)
    iv_unit: Literal["percent", "decimal"] = "percent"
    riskmap: RiskMapConfig = RiskMapConfig()
    regression: RegressionConfig = RegressionConfig()
    stats: StatsConfig = StatsConfig()
    benchmarks: BenchmarksConfig = BenchmarksConfig()
    output_dir: Path = Path("out")
    svg: bool = False

    @model_validator(mode="after")
    def check_market_names(self) -> EngineConfig:
        """市場名の重複と回帰対象の存在を検証する。"""

        names = [market.name for market in self.markets]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise ValueError(f"市場名が重複しています: {duplicates}")
        target = self.regression.target
        if target is not None and target not in names:
            raise ValueError(f"regression.target が markets にありません: {target}")
        return self

    @property
    def target_market(self) -> str:
        return self.regression.target or self.markets[0].name

    def referenced_paths(self) -> dict[str, Path]:
        """設定が参照する全入力ファイルをラベルつきで返す。"""

        paths: dict[str, Path] = {}
        for market in self.markets:
            paths[f"markets.{market.name}.price_csv"] = market.price_csv
            paths[f"markets.{market.name}.iv_csv"] = market.iv_csv
        for field_name in BenchmarksConfig.model_fields:
            value = getattr(self.benchmarks, field_name)
            if isinstance(value, Path):
                paths[f"benchmarks.{field_name}"] = value
        return paths

    def resolved(self, base_dir: Path) -> EngineConfig:
        """相対パスを設定ファイルのディレクトリ基準で解決した複製を返す。"""

        def resolve(path: Path | None) -> Path | None:
            if path is None or path.is_absolute():
                return path
            return base_dir / path

        markets = [
            market.model_copy(update={"price_csv": resolve(market.price_csv), "iv_csv": resolve(market.iv_csv)})
            for market in self.markets
        ]
        benchmark_updates = {
            field_name: resolve(getattr(self.benchmarks, field_name))
            for field_name in BenchmarksConfig.model_fields
            if isinstance(getattr(self.benchmarks, field_name), Path)
        }
        return self.model_copy(
            update={
                "markets": markets,
                "benchmarks": self.benchmarks.model_copy(update=benchmark_updates),
                "output_dir": resolve(self.output_dir),
            }
        )


class StatsSummary(BaseModel):
    """1系列の記述統計量。尖度は超過尖度 (正規分布で0)。"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = ""
    nobs: int = Field(ge=0)
    n_missing: int = Field(ge=0)
    min: float
    q1: float
    mean: float
    median: float
    q3: float
    max: float
    stdev: float = Field(ge=0)
    skewness: float | None = None
    kurtosis: float | None = None
    jb_stat: float | None = None
    jb_pvalue: float | None = Field(default=None, ge=0, le=1)

    @model_validator(mode="after")
    def check_order(self) -> StatsSummary:
        if not self.min <= self.q1 <= self.median <= self.q3 <= self.max:
            raise ValueError("分位点の順序が不正です。")
        return self


class CorrelationMatrix(BaseModel):
    """Pearson 相関行列。lag は列側の変数に適用した遅れ (取引日)。"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    labels: list[str]
    entries: list[list[float | None]]
    lag: int = Field(ge=0)

    def entry(self, row: str, column: str) -> float | None:
        return self.entries[self.labels.index(row)][self.labels.index(column)]


class MapAgreement(BaseModel):
    """基準リスクマップと代替設定のマップの一致度。"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    label: str
    compared_dates: int = Field(ge=0)
    agreement: float | None = None
    mean_abs_bucket_diff: float | None = None


class RegressionReport(BaseModel):
    """1回の回帰実行の係数と適合度。"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    model_kind: Literal["ols", "quasi_quantile", "quantile"]
    coefficients: dict[str, float]
    n_obs: int
    fit_kind: Literal["adjusted_r2", "pseudo_r2"]
    fit: float
    r2: float | None = None
    objective: float
    restricted_objective: float | None = None
    lags: int
    predictor_labels: list[str]
    threshold_label: str | None = None
    threshold_value: float | None = None
    tau: float | None = None
    rows_before_filter: int
    rows_after_filter: int


class DroppedRow(BaseModel):
    """欠損などの理由で捨てた行の記録。"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    stage: str
    date: str
    reason: str


class BatteryEntry(BaseModel):
    """回帰バッテリー1件分の結果。"""

    model_config = ConfigDict(extra="forbid")

    model_kind: Literal["ols", "quasi_quantile", "quantile"]
    predictor_set: str
    lag_depth: int
    threshold_or_tau: str
    overlap: bool
    status: Literal["ok", "insufficient_data"] = "ok"
    message: str | None = None
    coefficients: dict[str, float] | None = None
    n_obs: int | None = None
    fit: float | None = None
    fit_kind: str | None = None
    threshold_value: float | None = None

    @property
    def key(self) -> str:
        overlap = "overlap" if self.overlap else "nonoverlap"
        return f"{self.model_kind}|{self.predictor_set}|{self.lag_depth}|{self.threshold_or_tau}|{overlap}"


class BatteryDocument(BaseModel):
    """回帰バッテリー全体の出力文書。"""

    model_config = ConfigDict(extra="forbid")

    schema_version: int = BATTERY_SCHEMA_VERSION
    target: str
    horizon: int
    return_kind: str
    lags: int
    entries: dict[str, BatteryEntry]


class RunManifest(BaseModel):
    """1回の実行で使った設定、入力、行数、成果物の記録。"""

    model_config = ConfigDict(extra="forbid")

    engine_version: str = ENGINE_VERSION
    created_at: datetime
    command: str
    config: dict
    input_digests: dict[str, str]
    row_counts: dict[str, dict[str, int]]
    dropped_rows: list[DroppedRow]
    output_digests: dict[str, str]
