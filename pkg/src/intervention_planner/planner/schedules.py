"""実験スケジュールの生成と理論上の長さ"""

from typing import Optional

import numpy as np
import structlog

from ..models.data import Schedule, Strategy
from ..models.errors import ArgumentError

logger = structlog.get_logger(__name__)


def ceil_log2(n: int) -> int:
    """⌈log₂ n⌉（n >= 1）"""
    return (n - 1).bit_length()


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _require_pairs(n: int) -> None:
    if n < 2:
        raise ArgumentError(f"スケジュール生成には n >= 2 が必要です: n={n}")


def single_intervention_schedule(n: int) -> Schedule:
    """1変数介入を n-1 回（変数 0..n-2 の順）"""
    _require_pairs(n)
    return Schedule.of(n, ([t] for t in range(n - 1)))


def binary_codeword_schedule(n: int) -> Schedule:
    """変数 v に符号語 binary(v) を割り当て、実験 t はビット t が 1 の変数に介入

    n が2の冪のときだけ全ビット1の符号語が避けられないため、末尾に受動観測を追加する。
    """
    _require_pairs(n)
    m = ceil_log2(n)
    sets: list[list[int]] = [[v for v in range(n) if v >> t & 1] for t in range(m)]
    if is_power_of_two(n):
        sets.append([])
    return Schedule.of(n, sets)


def recursive_halving_schedule(n: int) -> Schedule:
    """各部分集合の下半分（奇数なら (s-1)/2 個）に同時介入して再帰的に二分する"""
    _require_pairs(n)
    parts: list[list[int]] = [list(range(n))]
    sets: list[list[int]] = []
    while any(len(part) > 1 for part in parts):
        chosen: list[int] = []
        next_parts: list[list[int]] = []
        for part in parts:
            if len(part) <= 1:
                next_parts.append(part)
                continue
            half = len(part) // 2
            chosen.extend(part[:half])
            next_parts.extend([part[:half], part[half:]])
        sets.append(sorted(chosen))
        parts = next_parts
    if is_power_of_two(n):
        sets.append([])
    return Schedule.of(n, sets)


def kmax_blocks(n: int, kmax: int) -> list[list[int]]:
    """変数を ⌈n/kmax⌉ 個のほぼ等しいブロックに分割"""
    p = -(-n // kmax)
    return [[int(v) for v in block] for block in np.array_split(np.arange(n), p)]


def kmax_schedule(n: int, kmax: int) -> Schedule:
    """介入サイズが kmax 以下に制限されたスケジュール

    第1段: 最後以外の各ブロックに丸ごと介入（p-1 回）。
    第2段: ブロックを2つずつ組にし、両ブロック内の符号語分割を同時に行う。
    """
    if kmax < 1 or 2 * kmax >= n:
        raise ArgumentError(
            f"kmax は 1 <= kmax < n/2 である必要があります (n={n}, kmax={kmax})。"
            "それ以上の場合は binary_codeword_schedule を使用してください"
        )
    blocks = kmax_blocks(n, kmax)
    sets: list[list[int]] = [block for block in blocks[:-1]]
    for start in range(0, len(blocks), 2):
        group = blocks[start:start + 2]
        rounds = max(ceil_log2(len(block)) for block in group)
        for t in range(rounds):
            sets.append(sorted(
                block[i] for block in group for i in range(len(block)) if i >> t & 1
            ))
    schedule = Schedule.of(n, sets)
    logger.debug("kmax スケジュールを生成", n=n, kmax=kmax, blocks=len(blocks), length=schedule.length)
    return schedule


def sufficiency_bound(n: int) -> int:
    """⌈log₂ n⌉ + 1"""
    return ceil_log2(n) + 1


def tight_bound(n: int) -> int:
    """⌈log₂ n⌉ + [n が2の冪]"""
    return ceil_log2(n) + int(is_power_of_two(n))


def kmax_bound(n: int, kmax: int) -> tuple[int, bool]:
    """(上界, 厳密か)。kmax が n を割り切り n/kmax が偶数のとき厳密"""
    p = -(-n // kmax)
    value = (p - 1) + (-(-p // 2)) * ceil_log2(kmax)
    return value, n % kmax == 0 and p % 2 == 0


def theoretical_length(n: int, strategy: Strategy, kmax: Optional[int] = None) -> int:
    """各戦略の理論上の実験回数"""
    if strategy == Strategy.SINGLE:
        return n - 1
    if strategy == Strategy.KMAX:
        if kmax is None:
            raise ArgumentError("kmax 戦略には kmax が必要です")
        return kmax_bound(n, kmax)[0]
    return tight_bound(n)


def build_schedule(n: int, strategy: Strategy, kmax: Optional[int] = None) -> Schedule:
    """戦略名からスケジュールを生成"""
    if strategy == Strategy.KMAX:
        if kmax is None:
            raise ArgumentError("kmax 戦略には --kmax が必要です")
        return kmax_schedule(n, kmax)
    if kmax is not None:
        raise ArgumentError(f"--kmax は kmax 戦略でのみ指定できます (strategy={strategy.value})")
    if strategy == Strategy.SINGLE:
        return single_intervention_schedule(n)
    if strategy == Strategy.HALVING:
        return recursive_halving_schedule(n)
    return binary_codeword_schedule(n)
