"""IVRVSRI 指標の計算、リスクマップ、ベンチマーク、回帰評価、描画をまとめて実行する CLI。

引数:
    - command: validate / indicator / riskmap / stats / benchmarks / evaluate / report / all
    - --config: エンジン設定 TOML
    - --out: 出力ディレクトリ。設定の output_dir を上書きする
    - --svg: SVG も出力する (all と各段で report を追加実行)
    - --lags: 回帰のラグ次数 p
    - --overlap: 回帰の重複リターン指定 on / off / both
    - --verbose: DEBUG ログを出す

入力:
    - 設定ファイルと、そこから参照される CSV

出力:
    - `<out>/indicator/**`
    - `<out>/riskmap/**`
    - `<out>/stats/**`
    - `<out>/benchmarks/**`
    - `<out>/evaluate/**`
    - `<out>/report/**`
    - `<out>/manifest.json`
    - 失敗時は `<out>.partial/` を残す

終了コード:
    - 0: 成功
    - 2: 設定・入力検証の失敗
    - 3: 計算の失敗
    - 4: 入出力の失敗
"""

from __future__ import annotations

import argparse
import logging
import shutil
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from src.config import apply_overrides, check_input_paths, load_config
from src.errors import EXIT_COMPUTATION, EXIT_IO, EXIT_OK, EngineError, OutputError
from src.ingest import read_firms, read_panel, read_series
from src.models import EngineConfig, RunManifest
from src.pipeline.benchmarks import build_benchmarks
from src.pipeline.common import StageContext
from src.pipeline.evaluate import build_regression_battery
from src.pipeline.indicator import build_indicator
from src.pipeline.report import emit_plots
from src.pipeline.riskmap import build_riskmap
from src.pipeline.stats import build_stats_report
from src.utils import file_digest, get_log_level, save_json

COMMANDS = ("validate", "indicator", "riskmap", "stats", "benchmarks", "evaluate", "report", "all")
PIPELINE_STAGES = ("indicator", "riskmap", "stats", "benchmarks", "evaluate")
MANIFEST_NAME = "manifest.json"
PARTIAL_SUFFIX = ".partial"
logger = logging.getLogger(__name__)

StageRunner = Callable[[EngineConfig, Path, StageContext], list[Path]]

STAGE_RUNNERS: dict[str, StageRunner] = {
    "indicator": build_indicator.process,
    "riskmap": build_riskmap.process,
    "stats": build_stats_report.process,
    "benchmarks": build_benchmarks.process,
    "evaluate": build_regression_battery.process,
    "report": emit_plots.process,
}


@dataclass(frozen=True)
class StageFailure:
    """失敗した段を識別する情報。"""

    stage: str
    exit_code: int
    message: str


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """CLI 引数を解釈する。"""

    parser = argparse.ArgumentParser(description="IVRVSRI システミックリスク分析パイプラインを実行する")
    parser.add_argument("command", choices=COMMANDS, help="実行する段。all は全段を順に実行する")
    parser.add_argument("--config", type=Path, required=True, help="エンジン設定 TOML")
    parser.add_argument("--out", type=Path, help="出力ディレクトリ。設定の output_dir を上書きする")
    parser.add_argument("--svg", action="store_true", help="SVG も出力する")
    parser.add_argument("--lags", type=int, help="回帰のラグ次数 p。既定値は設定の regression.lags")
    parser.add_argument("--overlap", choices=["on", "off", "both"], help="回帰に使う週次リターンの重複指定")
    parser.add_argument("--verbose", action="store_true", help="DEBUG ログを出す")
    return parser.parse_args(argv)


def select_stages(command: str, svg: bool) -> list[str]:
    """コマンドと --svg から実行する段の並びを決める。"""

    if command == "validate":
        return []
    if command == "report":
        return ["report"]
    stages = list(PIPELINE_STAGES) if command == "all" else [command]
    if svg:
        stages.append("report")
    return stages


def validate_inputs(config: EngineConfig) -> dict[str, int]:
    """参照される全 CSV を読み込み、文法と値を検証する。"""

    check_input_paths(config)
    counts: dict[str, int] = {}
    for market in config.markets:
        counts[f"{market.name}.price_csv"] = len(read_series(market.price_csv, column=market.price_column))
        counts[f"{market.name}.iv_csv"] = len(read_series(market.iv_csv, column=market.iv_column))
    settings = config.benchmarks
    for name, path in settings.level_series_paths().items():
        counts[f"benchmarks.{name}"] = len(read_series(path))
    if settings.firms_csv is not None:
        counts["benchmarks.firms_csv"] = len(read_firms(settings.firms_csv, k=settings.firms_k))
    for label in ("dd_panel_csv", "var_panel_csv"):
        path = getattr(settings, label)
        if path is not None:
            counts[f"benchmarks.{label}"] = len(read_panel(path)[0])
    for label in ("pdd_csv", "catfin_gpd_csv", "catfin_sged_csv"):
        path = getattr(settings, label)
        if path is not None:
            counts[f"benchmarks.{label}"] = len(read_series(path))
    logger.info("入力検証完了: files=%s", len(counts))
    return counts


def run_stage_with_error_logging(
    stage: str,
    config: EngineConfig,
    staging_dir: Path,
    context: StageContext,
) -> tuple[list[Path], StageFailure | None]:
    """段の失敗時にログを残して続行する。"""

    logger.info("段開始: stage=%s", stage)
    try:
        outputs = STAGE_RUNNERS[stage](config, staging_dir, context)
    except EngineError as exc:
        logger.exception("段失敗。処理を続行します: stage=%s exit_code=%s", stage, exc.exit_code)
        return [], StageFailure(stage=stage, exit_code=exc.exit_code, message=str(exc))
    except OSError as exc:
        logger.exception("段失敗 (入出力)。処理を続行します: stage=%s", stage)
        return [], StageFailure(stage=stage, exit_code=EXIT_IO, message=str(exc))
    except Exception as exc:
        logger.exception("段失敗 (想定外)。処理を続行します: stage=%s", stage)
        return [], StageFailure(stage=stage, exit_code=EXIT_COMPUTATION, message=str(exc))
    logger.info("段完了: stage=%s outputs=%s", stage, len(outputs))
    return outputs, None


def format_failure_summary(failures: list[StageFailure]) -> str:
    """失敗した段の一覧を終了メッセージ向けに整形する。"""

    joined = ", ".join(f"{failure.stage}(exit={failure.exit_code})" for failure in failures)
    return f"一部の段が失敗しました。ログを確認してください: {joined}"


def build_manifest(command: str, config: EngineConfig, context: StageContext, staging_dir: Path) -> RunManifest:
    """入力と成果物のダイジェストを含む実行記録を作る。"""

    input_digests = {label: file_digest(path) for label, path in sorted(config.referenced_paths().items())}
    output_digests = {
        path.relative_to(staging_dir).as_posix(): file_digest(path)
        for path in sorted(staging_dir.rglob("*"))
        if path.is_file() and path.name != MANIFEST_NAME
    }
    return RunManifest(
        created_at=datetime.now(timezone.utc),
        command=command,
        config=config.model_dump(mode="json"),
        input_digests=input_digests,
        row_counts=context.row_counts,
        dropped_rows=context.dropped_rows,
        output_digests=output_digests,
    )


def staging_path(out_dir: Path) -> Path:
    return out_dir.with_name(out_dir.name + PARTIAL_SUFFIX)


def publish(staging_dir: Path, out_dir: Path) -> None:
    """作業ディレクトリを出力先へ置き換える。前回の実行結果以外が残る出力先は上書きしない。"""

    if out_dir.exists():
        if any(out_dir.iterdir()) and not (out_dir / MANIFEST_NAME).exists():
            raise OutputError(f"出力先に実行結果以外のファイルがあるため上書きできません: {out_dir}")
        shutil.rmtree(out_dir)
    try:
        staging_dir.rename(out_dir)
    except OSError as exc:
        raise OutputError(f"出力ディレクトリを確定できませんでした: {staging_dir} -> {out_dir}") from exc


def run_pipeline(command: str, config: EngineConfig) -> int:
    """段を順に実行し、全段成功なら出力ディレクトリを確定して 0 を返す。"""

    stages = select_stages(command, config.svg)
    out_dir = Path(config.output_dir)
    staging_dir = staging_path(out_dir)
    if staging_dir.exists():
        shutil.rmtree(staging_dir)
    staging_dir.mkdir(parents=True)
    logger.info("パイプライン開始: command=%s stages=%s out=%s", command, stages, out_dir)

    context = StageContext(config)
    failures: list[StageFailure] = []
    for stage in stages:
        _, failure = run_stage_with_error_logging(stage, config, staging_dir, context)
        if failure is not None:
            failures.append(failure)
    if failures:
        logger.error("%s 途中結果: %s", format_failure_summary(failures), staging_dir)
        return failures[0].exit_code

    manifest = build_manifest(command, config, context, staging_dir)
    save_json(staging_dir / MANIFEST_NAME, manifest.model_dump(mode="json"))
    publish(staging_dir, out_dir)
    logger.info("パイプライン完了: out=%s outputs=%s", out_dir, len(manifest.output_digests))
    return EXIT_OK


def main(argv: list[str] | None = None) -> None:
    """IVRVSRI パイプライン CLI のエントリーポイント。"""

    args = parse_args(argv)
    level = logging.DEBUG if args.verbose else get_log_level()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(message)s")
    try:
        config = apply_overrides(
            load_config(args.config),
            out=args.out,
            lags=args.lags,
            overlap=args.overlap,
            svg=args.svg,
        )
        if args.command == "validate":
            validate_inputs(config)
            return
        check_input_paths(config)
        exit_code = run_pipeline(args.command, config)
    except EngineError as exc:
        logger.error("実行失敗: %s", exc)
        raise SystemExit(exc.exit_code) from exc
    if exit_code != EXIT_OK:
        raise SystemExit(exit_code)


if __name__ == "__main__":
    main()
