"""折れ線グラフとリスクマップのヒートストリップを SVG 文字列として生成する。

同じ入力からは常に同じバイト列を返す。座標は小数2桁に丸め、時刻や乱数は使わない。
"""

from __future__ import annotations

import html
import logging
import math
from collections.abc import Sequence

import numpy as np

from src.riskmap import COLOR_HEX, MISSING_HEX, RiskMap
from src.series import TimeSeries

WIDTH = 800
LINE_HEIGHT = 320
ROW_HEIGHT = 28
MARGIN_LEFT = 120
MARGIN_RIGHT = 20
MARGIN_TOP = 36
MARGIN_BOTTOM = 36
LINE_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
FONT = 'font-family="sans-serif" font-size="12"'
logger = logging.getLogger(__name__)


def _coord(value: float) -> str:
    return f"{value:.2f}"


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text class="title" x="{width // 2}" y="20" text-anchor="middle" {FONT}>{html.escape(title)}</text>',
    ]


def _date_axis(dates: Sequence, top: float, bottom: float) -> list[str]:
    if not dates:
        return []
    left = MARGIN_LEFT
    right = WIDTH - MARGIN_RIGHT
    return [
        f'<line class="axis" x1="{left}" y1="{_coord(bottom)}" x2="{right}" y2="{_coord(bottom)}" stroke="#000000"/>',
        f'<text class="date-label" x="{left}" y="{_coord(bottom + 16)}" {FONT}>{dates[0]}</text>',
        f'<text class="date-label" x="{right}" y="{_coord(bottom + 16)}" text-anchor="end" {FONT}>{dates[-1]}</text>',
    ]


def _x_positions(count: int) -> np.ndarray:
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    if count <= 1:
        return np.full(count, MARGIN_LEFT + span / 2.0)
    return MARGIN_LEFT + np.arange(count) * span / (count - 1)


def _path_data(xs: np.ndarray, ys: np.ndarray) -> str:
    """欠損で線を切った path の d 属性を返す。"""

    commands: list[str] = []
    pen_down = False
    for x, y in zip(xs, ys):
        if math.isnan(y):
            pen_down = False
            continue
        commands.append(f"{'L' if pen_down else 'M'}{_coord(x)},{_coord(y)}")
        pen_down = True
    return " ".join(commands)


def line_chart_svg(title: str, series: Sequence[TimeSeries]) -> str:
    """同じ日付インデックスを持つ系列の折れ線グラフ。縦軸は全系列の最小値から最大値。"""

    lines = _header(WIDTH, LINE_HEIGHT, title)
    top = MARGIN_TOP
    bottom = LINE_HEIGHT - MARGIN_BOTTOM
    observed = np.concatenate([item.dropna() for item in series]) if series else np.empty(0)
    if observed.size == 0:
        lines.append(
            f'<text class="annotation" x="{WIDTH // 2}" y="{LINE_HEIGHT // 2}" text-anchor="middle" {FONT}>no data</text>'
        )
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    low, high = float(np.min(observed)), float(np.max(observed))
    lines.extend(_date_axis(series[0].dates, top, bottom))
    lines.append(f'<text class="y-label" x="{MARGIN_LEFT - 6}" y="{_coord(top + 4)}" text-anchor="end" {FONT}>{high:.6g}</text>')
    lines.append(f'<text class="y-label" x="{MARGIN_LEFT - 6}" y="{_coord(bottom)}" text-anchor="end" {FONT}>{low:.6g}</text>')
    for index, item in enumerate(series):
        xs = _x_positions(len(item))
        if high == low:
            ys = np.where(item.missing, np.nan, (top + bottom) / 2.0)
        else:
            ys = bottom - (item.values - low) / (high - low) * (bottom - top)
        color = LINE_COLORS[index % len(LINE_COLORS)]
        lines.append(
            f'<path class="series" data-name="{html.escape(item.name)}" d="{_path_data(xs, ys)}" '
            f'fill="none" stroke="{color}" stroke-width="1"/>'
        )
        lines.append(
            f'<text class="legend" x="{MARGIN_LEFT + 8}" y="{_coord(top + 14 * (index + 1))}" fill="{color}" {FONT}>'
            f"{html.escape(item.name)}</text>"
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _color_runs(risk_map: RiskMap) -> list[tuple[int, int, str]]:
    """同じ色が続く区間を (開始, 終了(含まない), 色コード) にまとめる。"""

    runs: list[tuple[int, int, str]] = []
    for position, color in enumerate(risk_map.colors):
        code = MISSING_HEX if color is None else COLOR_HEX.get(color, MISSING_HEX)
        if runs and runs[-1][2] == code and runs[-1][1] == position:
            start, _, _ = runs[-1]
            runs[-1] = (start, position + 1, code)
        else:
            runs.append((position, position + 1, code))
    return runs


def _strip_row(risk_map: RiskMap, y: float) -> list[str]:
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    count = len(risk_map)
    elements = [
        f'<text class="row-label" x="{MARGIN_LEFT - 6}" y="{_coord(y + ROW_HEIGHT * 0.65)}" text-anchor="end" {FONT}>'
        f"{html.escape(risk_map.name)}</text>"
    ]
    if risk_map.classified_count() == 0:
        elements.append(
            f'<rect class="empty-strip" x="{MARGIN_LEFT}" y="{_coord(y)}" width="{span}" height="{ROW_HEIGHT - 4}" '
            f'fill="{MISSING_HEX}"/>'
        )
        elements.append(
            f'<text class="annotation" x="{MARGIN_LEFT + span // 2}" y="{_coord(y + ROW_HEIGHT * 0.65)}" '
            f'text-anchor="middle" {FONT}>warmup: {risk_map.policy.warmup} observations required, '
            f"{risk_map.classified_count()} classified</text>"
        )
        return elements
    cell = span / count
    for start, end, code in _color_runs(risk_map):
        elements.append(
            f'<rect class="bucket" x="{_coord(MARGIN_LEFT + start * cell)}" y="{_coord(y)}" '
            f'width="{_coord((end - start) * cell)}" height="{ROW_HEIGHT - 4}" fill="{code}"/>'
        )
    return elements


def heat_strip_svg(title: str, maps: Sequence[RiskMap]) -> str:
    """市場ごとに1行の色帯を並べたリスクマップ。"""

    height = MARGIN_TOP + ROW_HEIGHT * max(len(maps), 1) + MARGIN_BOTTOM
    lines = _header(WIDTH, height, title)
    for index, risk_map in enumerate(maps):
        lines.extend(_strip_row(risk_map, MARGIN_TOP + index * ROW_HEIGHT))
    if maps:
        lines.extend(_date_axis(maps[0].dates, MARGIN_TOP, height - MARGIN_BOTTOM))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def map_chart_svg(title: str, risk_map: RiskMap, overlay: TimeSeries | None = None) -> str:
    """リスクマップの色を背景に、指標 (と任意の重ね描き系列) を描く。"""

    lines = _header(WIDTH, LINE_HEIGHT, title)
    top = MARGIN_TOP
    bottom = LINE_HEIGHT - MARGIN_BOTTOM
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    if len(risk_map) and risk_map.classified_count():
        cell = span / len(risk_map)
        for start, end, code in _color_runs(risk_map):
            lines.append(
                f'<rect class="bucket" x="{_coord(MARGIN_LEFT + start * cell)}" y="{top}" '
                f'width="{_coord((end - start) * cell)}" height="{bottom - top}" fill="{code}" fill-opacity="0.6"/>'
            )
    else:
        lines.append(
            f'<text class="annotation" x="{WIDTH // 2}" y="{top + 14}" text-anchor="middle" {FONT}>'
            f"warmup: {risk_map.policy.warmup} observations required</text>"
        )
    indicator = TimeSeries(risk_map.dates, risk_map.values, name=risk_map.name)
    for index, item in enumerate([indicator] + ([overlay] if overlay is not None else [])):
        observed = item.dropna()
        if observed.size == 0:
            continue
        low, high = float(np.min(observed)), float(np.max(observed))
        xs = _x_positions(len(item))
        if high == low:
            ys = np.where(item.missing, np.nan, (top + bottom) / 2.0)
        else:
            ys = bottom - (item.values - low) / (high - low) * (bottom - top)
        color = "#000000" if index == 0 else LINE_COLORS[0]
        lines.append(
            f'<path class="series" data-name="{html.escape(item.name)}" d="{_path_data(xs, ys)}" '
            f'fill="none" stroke="{color}" stroke-width="1"/>'
        )
    lines.extend(_date_axis(risk_map.dates, top, bottom))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
