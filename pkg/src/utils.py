"""数値整形、分位点規則、ファイル保存、ダイジェスト計算に関する補助関数。"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from src.errors import OutputError

SIGNIFICANT_DIGITS = 10
FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"
DEFAULT_LOG_LEVEL = "INFO"
LOG_LEVEL_ENV = "IVRVSRI_LOG_LEVEL"
logger = logging.getLogger(__name__)


def quantile(values: np.ndarray | Sequence[float], probability: float) -> float:
    """順序統計量の線形補間 (0始まり位置 (n-1)q) で分位点を返す。

    欠損を含まない配列を渡すこと。エンジン内の分位点はすべてこの規則に従う。
    """

    array = np.asarray(values, dtype=float)
    if array.size == 0:
        raise ValueError("空の標本から分位点は計算できません。")
    return float(np.quantile(array, probability, method="linear"))


def format_float(value: float | None) -> str:
    """浮動小数点数を有効数字10桁の文字列にする。欠損は空文字。"""

    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return FLOAT_FORMAT % value


def round_significant(value: float | None) -> float | None:
    """JSON 出力向けに有効数字10桁へ丸めた値を返す。欠損と無限大は None。"""

    if value is None or not math.isfinite(value):
        return None
    return float(format_float(value))


def save_json(path: Path, payload: dict) -> Path:
    """JSON を UTF-8 インデント付きで保存する。"""

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    except ValueError as exc:
        raise OutputError(f"JSON に有限でない数値が含まれています: {path}") from exc
    except OSError as exc:
        raise OutputError(f"JSON を保存できませんでした: {path}") from exc
    return path


def save_frame(path: Path, frame: pd.DataFrame) -> Path:
    """DataFrame を有効数字10桁・LF 改行の CSV として保存する。"""

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    except OSError as exc:
        raise OutputError(f"CSV を保存できませんでした: {path}") from exc
    return path


def save_text(path: Path, text: str) -> Path:
    """テキスト成果物を UTF-8 で保存する。"""

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"ファイルを保存できませんでした: {path}") from exc
    return path


def file_digest(path: Path) -> str:
    """ファイル内容の SHA-256 ダイジェストを返す。"""

    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def slugify_label(value: str) -> str:
    """系列名を出力ファイル名向けの簡易 slug に変換する。"""

    text = "".join(char if char.isalnum() else "_" for char in value.strip().lower())
    text = text.strip("_")
    if text:
        return text
    return "series_" + hashlib.sha1(value.encode("utf-8")).hexdigest()[:8]


def get_log_level(default: str = DEFAULT_LOG_LEVEL) -> int:
    """環境変数からログレベルを返す。"""

    raw_value = os.getenv(LOG_LEVEL_ENV)
    if raw_value is None:
        return logging.getLevelName(default)
    level = logging.getLevelName(raw_value.strip().upper())
    if not isinstance(level, int):
        logger.warning("%s の値が不正なため既定値を使用します: %s", LOG_LEVEL_ENV, raw_value)
        return logging.getLevelName(default)
    return level
