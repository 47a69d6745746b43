"""入力 CSV の読み込みと文法検証。

共通の規則:
    - 1行目はヘッダー。時系列は先頭列が `date` (YYYY-MM-DD)。
    - 数値は小数点のみ。空セルは欠損として扱いエラーにしない。
    - 日付の重複・逆順、数値でないセル、列数の不一致はファイル単位で失敗させ、最大20行を報告する。
"""

from __future__ import annotations

import csv
import logging
import math
import re
from datetime import date
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from src.benchmarks import DEFAULT_PRUDENTIAL_K, FirmSnapshot
from src.errors import EngineError, IngestionError
from src.series import TimeSeries

Schema = Literal["series", "panel", "firm", "dd_panel", "chain"]
MAX_REPORTED_LINES = 20
DATE_PATTERN = re.compile(r"^\d{4}-\d{2}-\d{2}$")
NUMBER_PATTERN = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
FIRM_COLUMNS = ("name", "W", "D", "lrmes")
CHAIN_COLUMNS = ("strike", "quote")
logger = logging.getLogger(__name__)


class _LineErrors:
    """行番号つきのエラーを最大件数まで集める。"""

    def __init__(self, path: Path) -> None:
        self.path = path
        self.lines: list[str] = []
        self.total = 0

    def add(self, line_number: int, message: str) -> None:
        self.total += 1
        if len(self.lines) < MAX_REPORTED_LINES:
            self.lines.append(f"line {line_number}: {message}")

    def raise_if_any(self) -> None:
        if not self.total:
            return
        raise IngestionError(
            f"CSV の検証に失敗しました: path={self.path} errors={self.total}",
            path=str(self.path),
            offending_lines=tuple(self.lines),
        )


def _check_field_counts(path: Path) -> None:
    """各行のフィールド数がヘッダーと一致するかを DataFrame にする前に調べる。"""

    errors = _LineErrors(path)
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None:
                return
            for record in reader:
                if record and len(record) != len(header):
                    errors.add(reader.line_num, f"列数がヘッダーと一致しません: expected={len(header)} actual={len(record)}")
    except (csv.Error, UnicodeDecodeError) as exc:
        raise IngestionError(f"CSV を解析できませんでした: {path}: {exc}", path=str(path)) from exc
    errors.raise_if_any()


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise IngestionError(f"入力ファイルが見つかりません: {path}", path=str(path))
    _check_field_counts(path)
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=False)
    except pd.errors.EmptyDataError as exc:
        raise IngestionError(f"CSV が空です: {path}", path=str(path)) from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise IngestionError(f"CSV を解析できませんでした: {path}: {exc}", path=str(path)) from exc


def _cell_text(cell: object) -> str | None:
    """セル文字列を返す。文字列でないセルは None。"""

    if isinstance(cell, str):
        return cell.strip()
    return None


def parse_number(text: str) -> float:
    """数値セルを float に変換する。空文字は欠損 (NaN)。"""

    if text == "":
        return math.nan
    if not NUMBER_PATTERN.match(text):
        raise ValueError(f"数値ではありません: {text!r}")
    return float(text)


def parse_date(text: str) -> date:
    if not DATE_PATTERN.match(text):
        raise ValueError(f"日付は YYYY-MM-DD で指定してください: {text!r}")
    return date.fromisoformat(text)


def _require_columns(path: Path, frame: pd.DataFrame, expected: tuple[str, ...], exact: bool = False) -> None:
    columns = tuple(str(column).strip() for column in frame.columns)
    if exact and columns[: len(expected)] != expected:
        raise IngestionError(
            f"ヘッダーが想定と一致しません: path={path} expected={list(expected)} actual={list(columns)}",
            path=str(path),
        )
    missing = [column for column in expected if column not in columns]
    if missing:
        raise IngestionError(
            f"ヘッダーに必要な列がありません: path={path} missing={missing} actual={list(columns)}",
            path=str(path),
        )


def _read_dated_panel(path: Path) -> tuple[tuple[date, ...], dict[str, np.ndarray]]:
    frame = _read_frame(path)
    frame.columns = [str(column).strip() for column in frame.columns]
    if not frame.columns.size or frame.columns[0] != "date":
        raise IngestionError(f"先頭列は date にしてください: path={path} header={list(frame.columns)}", path=str(path))
    value_columns = list(frame.columns[1:])
    if not value_columns:
        raise IngestionError(f"値の列がありません: path={path}", path=str(path))
    duplicated = sorted({column for column in value_columns if value_columns.count(column) > 1})
    if duplicated:
        raise IngestionError(f"列名が重複しています: path={path} columns={duplicated}", path=str(path))

    errors = _LineErrors(path)
    dates: list[date] = []
    rows: list[list[float]] = []
    seen: dict[date, int] = {}
    for offset, record in enumerate(frame.itertuples(index=False, name=None)):
        line_number = offset + 2
        texts = [_cell_text(cell) for cell in record]
        if any(text is None for text in texts):
            errors.add(line_number, "列数がヘッダーと一致しません")
            continue
        try:
            day = parse_date(texts[0])
        except ValueError as exc:
            errors.add(line_number, str(exc))
            continue
        if day in seen:
            errors.add(line_number, f"日付が重複しています: {day} (line {seen[day]})")
            continue
        if dates and day < dates[-1]:
            errors.add(line_number, f"日付が昇順ではありません: {day}")
            continue
        values: list[float] = []
        for column, text in zip(value_columns, texts[1:]):
            try:
                values.append(parse_number(text))
            except ValueError as exc:
                errors.add(line_number, f"column={column}: {exc}")
                break
        else:
            seen[day] = line_number
            dates.append(day)
            rows.append(values)
    errors.raise_if_any()
    if not dates:
        raise IngestionError(f"データ行がありません: path={path}", path=str(path))
    matrix = np.asarray(rows, dtype=float).reshape(len(dates), len(value_columns))
    return tuple(dates), {column: matrix[:, index] for index, column in enumerate(value_columns)}


def read_series(path: Path, column: str | None = None, name: str | None = None, unit: str | None = None) -> TimeSeries:
    """1系列の CSV を読む。値の列が複数ある場合は column を指定する。"""

    dates, columns = _read_dated_panel(path)
    if column is None:
        if len(columns) != 1:
            raise IngestionError(
                f"値の列が複数あるため column を指定してください: path={path} columns={list(columns)}",
                path=str(path),
            )
        column = next(iter(columns))
    if column not in columns:
        raise IngestionError(f"指定した列がありません: path={path} column={column}", path=str(path))
    series = TimeSeries(dates, columns[column], name=name or column, unit=unit)
    logger.info("系列を読み込みました: path=%s column=%s rows=%s missing=%s", path, column, len(series), int(series.missing.sum()))
    return series


def read_panel(path: Path, unit: str | None = None) -> list[TimeSeries]:
    """横持ちパネル CSV を列ごとの系列にする。"""

    dates, columns = _read_dated_panel(path)
    panel = [TimeSeries(dates, values, name=column, unit=unit) for column, values in columns.items()]
    logger.info("パネルを読み込みました: path=%s columns=%s rows=%s", path, len(panel), len(dates))
    return panel


def read_firms(path: Path, k: float = DEFAULT_PRUDENTIAL_K) -> list[FirmSnapshot]:
    """`name,W,D,lrmes` (任意で `k` 列) の企業 CSV を読む。k 列が空なら引数の k を使う。"""

    frame = _read_frame(path)
    frame.columns = [str(column).strip() for column in frame.columns]
    _require_columns(path, frame, FIRM_COLUMNS)
    errors = _LineErrors(path)
    firms: list[FirmSnapshot] = []
    names: set[str] = set()
    has_k = "k" in frame.columns
    for offset, record in enumerate(frame.to_dict(orient="records")):
        line_number = offset + 2
        texts = {column: _cell_text(value) for column, value in record.items()}
        if any(text is None for text in texts.values()):
            errors.add(line_number, "列数がヘッダーと一致しません")
            continue
        name = texts["name"]
        if not name:
            errors.add(line_number, "name が空です")
            continue
        if name in names:
            errors.add(line_number, f"企業名が重複しています: {name}")
            continue
        try:
            equity, debt, lrmes = (parse_number(texts[column]) for column in ("W", "D", "lrmes"))
            firm_k = parse_number(texts["k"]) if has_k else math.nan
        except ValueError as exc:
            errors.add(line_number, str(exc))
            continue
        if any(math.isnan(value) for value in (equity, debt, lrmes)):
            errors.add(line_number, "W, D, lrmes は必須です")
            continue
        try:
            firms.append(FirmSnapshot(name, equity, debt, lrmes, k if math.isnan(firm_k) else firm_k))
        except EngineError as exc:
            errors.add(line_number, exc.message)
            continue
        names.add(name)
    errors.raise_if_any()
    logger.info("企業データを読み込みました: path=%s firms=%s", path, len(firms))
    return firms


def read_chain(path: Path) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """`strike,quote` のオプションチェーン CSV を行使価格の昇順で返す。"""

    frame = _read_frame(path)
    frame.columns = [str(column).strip() for column in frame.columns]
    _require_columns(path, frame, CHAIN_COLUMNS, exact=True)
    errors = _LineErrors(path)
    pairs: list[tuple[float, float]] = []
    for offset, record in enumerate(frame[list(CHAIN_COLUMNS)].itertuples(index=False, name=None)):
        line_number = offset + 2
        texts = [_cell_text(cell) for cell in record]
        if any(text is None or text == "" for text in texts):
            errors.add(line_number, "strike と quote は必須です")
            continue
        try:
            strike, quote = (parse_number(text) for text in texts)
        except ValueError as exc:
            errors.add(line_number, str(exc))
            continue
        pairs.append((strike, quote))
    errors.raise_if_any()
    if not pairs:
        raise IngestionError(f"データ行がありません: path={path}", path=str(path))
    pairs.sort()
    strikes = tuple(strike for strike, _ in pairs)
    duplicates = sorted({strike for strike in strikes if strikes.count(strike) > 1})
    if duplicates:
        raise IngestionError(f"行使価格が重複しています: path={path} strikes={duplicates}", path=str(path))
    return strikes, tuple(quote for _, quote in pairs)


def ingest(path: Path, schema: Schema, **options):
    """スキーマ名で読み込み関数を選ぶ。"""

    path = Path(path)
    if schema == "series":
        return read_series(path, **options)
    if schema in {"panel", "dd_panel"}:
        return read_panel(path, **options)
    if schema == "firm":
        return read_firms(path, **options)
    if schema == "chain":
        return read_chain(path)
    raise IngestionError(f"未対応のスキーマです: {schema}", path=str(path))
