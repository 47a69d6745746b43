"""TOML 設定ファイルの読み込みと、参照する入力ファイルの存在確認。"""

from __future__ import annotations

import logging
import tomllib
from pathlib import Path

from pydantic import ValidationError as PydanticValidationError

from src.errors import ConfigurationError, ValidationError
from src.models import EngineConfig, RegressionConfig

logger = logging.getLogger(__name__)


def load_config(path: Path) -> EngineConfig:
    """設定ファイルを読み込み、相対パスを設定ファイルのディレクトリ基準で解決する。"""

    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"設定ファイルが見つかりません: {path}")
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"設定ファイルを解析できませんでした: {path}: {exc}") from exc
    try:
        config = EngineConfig.model_validate(raw)
    except PydanticValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()
        )
        raise ConfigurationError(f"設定値が不正です: {path}: {details}") from exc
    resolved = config.resolved(path.resolve().parent)
    logger.info("設定読み込み完了: path=%s markets=%s", path, [market.name for market in resolved.markets])
    return resolved


def check_input_paths(config: EngineConfig) -> dict[str, Path]:
    """設定が参照する入力ファイルが全て存在するかを確認する。"""

    paths = config.referenced_paths()
    missing = [f"{label}={path}" for label, path in paths.items() if not path.is_file()]
    if missing:
        raise ValidationError(f"入力ファイルが見つかりません: {', '.join(missing)}")
    return paths


def apply_overrides(
    config: EngineConfig,
    out: Path | None = None,
    lags: int | None = None,
    overlap: str | None = None,
    svg: bool | None = None,
) -> EngineConfig:
    """CLI 引数で設定値を上書きし、値域を検証し直す。"""

    regression_updates = {key: value for key, value in (("lags", lags), ("overlap", overlap)) if value is not None}
    updates: dict[str, object] = {}
    if out is not None:
        updates["output_dir"] = Path(out)
    if svg:
        updates["svg"] = True
    if not (regression_updates or updates):
        return config
    try:
        regression = RegressionConfig.model_validate({**config.regression.model_dump(), **regression_updates})
    except PydanticValidationError as exc:
        raise ConfigurationError(f"CLI 引数の値が不正です: {exc.errors()[0]['msg']}") from exc
    return config.model_copy(update={**updates, "regression": regression})
