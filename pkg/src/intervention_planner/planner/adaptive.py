"""適応的な次実験の選択

未確定ペアのうち有用な方向検定を受けるペア数を主スコア、
有用な隣接検定を受けるペア数を副スコアとして介入集合を選ぶ。
同点は (最小要素, サイズ, 要素列) の辞書順で最小のものを採る。
"""

from typing import Optional

import numpy as np
import structlog

from ..graph.dag import iter_bits
from ..knowledge.pairwise import KnowledgeState
from ..models.data import InterventionSet, Pair, PairRelation
from ..models.errors import ArgumentError

logger = structlog.get_logger(__name__)

DEFAULT_EXHAUSTIVE_MAX_N = 16

# (x, y, x からの方向検定が有用, y からの方向検定が有用, 隣接検定が有用)
_PairNeed = tuple[int, int, bool, bool, bool]


def _needs(state: KnowledgeState) -> list[_PairNeed]:
    needs: list[_PairNeed] = []
    for x, y in state.unresolved_pairs():
        possible = state.state(x, y).possibilities
        needs.append((
            x,
            y,
            PairRelation.FORWARD in possible,
            PairRelation.BACKWARD in possible,
            PairRelation.NO_EDGE in possible,
        ))
    return needs


def _score(needs: list[_PairNeed], mask: int) -> tuple[int, int]:
    primary = secondary = 0
    for x, y, from_x, from_y, adjacency in needs:
        x_in = bool(mask >> x & 1)
        y_in = bool(mask >> y & 1)
        if x_in and not y_in:
            primary += from_x
        elif y_in and not x_in:
            primary += from_y
        elif not x_in and not y_in:
            secondary += adjacency
    return primary, secondary


def _tie_key(mask: int, n: int) -> tuple[int, int, tuple[int, ...]]:
    members = tuple(iter_bits(mask))
    return (members[0] if members else n, len(members), members)


def _exhaustive(n: int, needs: list[_PairNeed], cap: int) -> int:
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    sizes = bits.sum(axis=1)
    primary = np.zeros(masks.shape[0], dtype=np.int64)
    secondary = np.zeros(masks.shape[0], dtype=np.int64)
    for x, y, from_x, from_y, adjacency in needs:
        x_in, y_in = bits[:, x], bits[:, y]
        if from_x:
            primary += x_in & ~y_in
        if from_y:
            primary += y_in & ~x_in
        if adjacency:
            secondary += ~x_in & ~y_in
    score = primary * (len(needs) + 1) + secondary
    score[sizes > cap] = -1
    if primary[sizes <= cap].max(initial=0) == 0:
        return 0
    best = np.flatnonzero(score == score.max())
    return min((int(m) for m in best), key=lambda m: _tie_key(m, n))


def _greedy(n: int, needs: list[_PairNeed], cap: int) -> int:
    mask = 0
    current = _score(needs, mask)
    while bin(mask).count("1") < cap:
        candidates = [mask | 1 << v for v in range(n) if not mask >> v & 1]
        best = max(candidates, key=lambda m: (_score(needs, m), -m))
        best_score = _score(needs, best)
        if best_score <= current:
            break
        mask, current = best, best_score
    return mask if current[0] > 0 else 0


def adaptive_next(
    state: KnowledgeState,
    kmax: Optional[int] = None,
    exhaustive_max_n: int = DEFAULT_EXHAUSTIVE_MAX_N,
) -> InterventionSet:
    """現在の知識から次の介入集合を提案する（有益な候補がなければ空集合）"""
    n = state.n
    if kmax is not None and kmax < 1:
        raise ArgumentError(f"kmax は1以上である必要があります: {kmax}")
    cap = n if kmax is None else min(kmax, n)
    needs = _needs(state)
    if not needs:
        return InterventionSet()
    if n <= exhaustive_max_n:
        mask = _exhaustive(n, needs, cap)
    else:
        logger.debug("貪欲法で介入集合を構成", n=n, limit=exhaustive_max_n)
        mask = _greedy(n, needs, cap)
    proposal = InterventionSet.from_mask(mask)
    logger.debug(
        "次の介入集合を提案",
        intervention=proposal.sorted_members(),
        unresolved=len(needs),
    )
    return proposal


def unresolved_pairs_benefiting(state: KnowledgeState, proposal: InterventionSet) -> list[Pair]:
    """提案が有用な検定を与える未確定ペア"""
    mask = proposal.mask
    return [
        (x, y)
        for x, y, from_x, from_y, adjacency in _needs(state)
        if (
            (mask >> x & 1 and not mask >> y & 1 and from_x)
            or (mask >> y & 1 and not mask >> x & 1 and from_y)
            or (not mask >> x & 1 and not mask >> y & 1 and adjacency)
        )
    ]
