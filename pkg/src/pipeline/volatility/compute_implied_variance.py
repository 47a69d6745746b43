"""単一満期のオプションチェーン CSV からモデルフリー・インプライド分散と指数水準を計算する。

引数:
    - --chain: `strike,quote` の CSV
    - --expiry: 満期までの年数 T
    - --rate: 無リスク金利 R (連続複利)
    - --forward: フォワード F
    - --out: 結果 JSON の保存先。省略時は標準出力のみ

入力:
    - オプションチェーン CSV

出力:
    - 指定時は結果 JSON

主な内容:
    - K0 (F 以下で最大の行使価格)
    - 年率インプライド分散
    - ボラティリティ指数水準 (100 * sqrt(分散))
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[3]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.errors import EngineError
from src.ingest import read_chain
from src.utils import round_significant, save_json
from src.volatility import OptionChainSlice, implied_variance, implied_variance_index

logger = logging.getLogger(__name__)


def process(chain_path: Path, expiry: float, rate: float, forward: float, out_path: Path | None = None) -> dict:
    """チェーンを読み込んで分散と指数水準を返す。"""

    strikes, quotes = read_chain(chain_path)
    chain = OptionChainSlice.from_chain(strikes, quotes, expiry_fraction=expiry, risk_free=rate, forward=forward)
    payload = {
        "chain": str(chain_path),
        "expiry": expiry,
        "rate": rate,
        "forward": forward,
        "k0": chain.strikes[chain.k0],
        "strikes": len(strikes),
        "variance": round_significant(implied_variance(chain)),
        "index": round_significant(implied_variance_index(chain)),
    }
    logger.info("インプライド分散計算完了: chain=%s k0=%s index=%s", chain_path, payload["k0"], payload["index"])
    if out_path is not None:
        save_json(out_path, payload)
    return payload


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="オプションチェーンからインプライド分散を計算する")
    parser.add_argument("--chain", type=Path, required=True, help="`strike,quote` の CSV")
    parser.add_argument("--expiry", type=float, required=True, help="満期までの年数 T")
    parser.add_argument("--rate", type=float, default=0.0, help="無リスク金利 R")
    parser.add_argument("--forward", type=float, required=True, help="フォワード F")
    parser.add_argument("--out", type=Path, help="結果 JSON の保存先")
    return parser.parse_args()


def main() -> None:
    """インプライド分散計算のエントリーポイント。"""

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    args = parse_args()
    try:
        payload = process(args.chain, args.expiry, args.rate, args.forward, args.out)
    except EngineError as exc:
        logger.error("インプライド分散計算失敗: %s", exc)
        raise SystemExit(exc.exit_code) from exc
    print(json.dumps(payload, ensure_ascii=False))


if __name__ == "__main__":
    main()
