"""エンジン全体で使う例外と終了コードを定義する。

終了コード:
    - 0: 成功
    - 2: 設定・入力検証の失敗
    - 3: 計算の失敗
    - 4: 入出力の失敗
"""

from __future__ import annotations

from dataclasses import dataclass

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3
EXIT_IO = 4


@dataclass
class EngineError(Exception):
    """失敗時のメッセージと終了コードを保持する例外。"""

    message: str
    exit_code: int = EXIT_COMPUTATION

    def __str__(self) -> str:
        return self.message


@dataclass
class ValidationError(EngineError):
    """設定ファイルや入力 CSV の検証失敗。"""

    exit_code: int = EXIT_VALIDATION


@dataclass
class IngestionError(ValidationError):
    """CSV の文法違反。問題のある行番号を最大20件まで保持する。"""

    path: str = ""
    offending_lines: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.offending_lines:
            return self.message
        joined = "\n".join(f"  - {line}" for line in self.offending_lines)
        return f"{self.message}\n{joined}"


@dataclass
class ConfigurationError(EngineError):
    """パラメータや系列の組み合わせが不正。"""

    exit_code: int = EXIT_VALIDATION


@dataclass
class ComputationError(EngineError):
    """計算段階の失敗。"""

    exit_code: int = EXIT_COMPUTATION


@dataclass
class InsufficientHistoryError(ComputationError):
    """系列長が計算に必要な履歴に満たない。"""


@dataclass
class InsufficientDataError(ComputationError):
    """回帰などで有効な行数が足りない。"""


@dataclass
class InsufficientOverlapError(ComputationError):
    """系列の日付が重ならない。"""


@dataclass
class DomainError(ComputationError):
    """非正の価格など、数式の定義域外の値。"""


@dataclass
class DegenerateChainError(ComputationError):
    """オプションチェーンから負の分散が得られた。"""


@dataclass
class SingularDesignError(ComputationError):
    """計画行列がフルランクでない。"""

    collinear_columns: tuple[str, ...] = ()


@dataclass
class SolverError(ComputationError):
    """最適化ソルバーが収束しなかった。"""

    best_objective: float | None = None
    gap: float | None = None


@dataclass
class InternalConsistencyError(ComputationError):
    """2通りの計算結果が一致しない。実装の不具合を示す。"""


@dataclass
class NestingViolationError(ComputationError):
    """制約付きモデルの目的関数値が完全モデルより小さい。"""


@dataclass
class OutputError(EngineError):
    """成果物の書き込み失敗。"""

    exit_code: int = EXIT_IO
