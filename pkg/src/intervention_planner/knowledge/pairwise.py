"""ペアごとの可能性格子による知識の蓄積"""

from dataclasses import dataclass, field
from itertools import combinations
from types import MappingProxyType
from typing import Iterable, Mapping

import structlog

from ..graph.dag import Dag, iter_bits, make_dag
from ..graph.oracle import OracleResponse
from ..models.data import (
    Experiment,
    KnowledgeSnapshot,
    Pair,
    PairOutcome,
    PairRelation,
    PairStateRecord,
    Verdict,
)
from ..models.errors import (
    ArgumentError,
    ContradictionError,
    CycleError,
    NotResolvedError,
)

logger = structlog.get_logger(__name__)

ALL_RELATIONS: frozenset[PairRelation] = frozenset(PairRelation)

VERDICT_IMPLICATIONS: dict[Verdict, frozenset[PairRelation]] = {
    Verdict.EDGE_X_TO_Y: frozenset({PairRelation.FORWARD}),
    Verdict.EDGE_Y_TO_X: frozenset({PairRelation.BACKWARD}),
    Verdict.NO_EDGE_FROM_X: frozenset({PairRelation.BACKWARD, PairRelation.NO_EDGE}),
    Verdict.NO_EDGE_FROM_Y: frozenset({PairRelation.FORWARD, PairRelation.NO_EDGE}),
    Verdict.ADJACENT: frozenset({PairRelation.FORWARD, PairRelation.BACKWARD}),
    Verdict.NOT_ADJACENT: frozenset({PairRelation.NO_EDGE}),
    Verdict.NONE: ALL_RELATIONS,
}

# 列挙順を固定する
RELATION_ORDER = (PairRelation.FORWARD, PairRelation.BACKWARD, PairRelation.NO_EDGE)


@dataclass(frozen=True)
class PairState:
    """ペア (x < y) に残っている可能性"""
    possibilities: frozenset[PairRelation] = ALL_RELATIONS

    def __post_init__(self) -> None:
        if not self.possibilities:
            raise ContradictionError("ペアの可能性が空になりました")

    @property
    def resolved(self) -> bool:
        return len(self.possibilities) == 1

    @property
    def relation(self) -> PairRelation:
        if not self.resolved:
            raise ArgumentError("未確定のペアです")
        return next(iter(self.possibilities))

    def narrowed(self, allowed: frozenset[PairRelation]) -> "PairState":
        return PairState(self.possibilities & allowed)

    def ordered(self) -> list[PairRelation]:
        return [r for r in RELATION_ORDER if r in self.possibilities]


def edge_relation(parent: int, child: int) -> tuple[Pair, PairRelation]:
    """有向辺をペアとその関係に変換"""
    if parent < child:
        return (parent, child), PairRelation.FORWARD
    return (child, parent), PairRelation.BACKWARD


@dataclass(frozen=True)
class KnowledgeState:
    """全ペアの可能性格子と実験履歴"""
    n: int
    pair_states: Mapping[Pair, PairState]
    history: tuple[Experiment, ...] = field(default=())

    @classmethod
    def fresh(cls, n: int) -> "KnowledgeState":
        if n < 1:
            raise ArgumentError(f"変数の数は1以上である必要があります: n={n}")
        states = {pair: PairState() for pair in combinations(range(n), 2)}
        return cls(n, MappingProxyType(states))

    @property
    def resolved(self) -> bool:
        return all(s.resolved for s in self.pair_states.values())

    def state(self, x: int, y: int) -> PairState:
        return self.pair_states[(min(x, y), max(x, y))]

    def unresolved_pairs(self) -> list[Pair]:
        return [pair for pair, s in sorted(self.pair_states.items()) if not s.resolved]

    def resolved_pairs(self) -> dict[Pair, PairRelation]:
        return {
            pair: s.relation for pair, s in sorted(self.pair_states.items()) if s.resolved
        }

    def snapshot(self) -> KnowledgeSnapshot:
        return KnowledgeSnapshot(
            n=self.n,
            history=[e.intervention.sorted_members() for e in self.history],
            pairs=[
                PairStateRecord(x=x, y=y, possibilities=s.ordered())
                for (x, y), s in sorted(self.pair_states.items())
            ],
            resolved=self.resolved,
        )

    def _replaced(
        self, states: dict[Pair, PairState], history: Iterable[Experiment]
    ) -> "KnowledgeState":
        return KnowledgeState(self.n, MappingProxyType(states), tuple(history))


def update_pairwise(
    state: KnowledgeState,
    outcomes: Iterable[PairOutcome],
    experiment: Experiment,
    experiment_index: int | None = None,
) -> KnowledgeState:
    """1実験分の判定で各ペアの可能性を絞り込む"""
    states = dict(state.pair_states)
    for outcome in outcomes:
        pair = outcome.pair
        if pair not in states:
            raise ArgumentError(f"ペア {pair} は n={state.n} の範囲外です")
        try:
            states[pair] = states[pair].narrowed(VERDICT_IMPLICATIONS[outcome.verdict])
        except ContradictionError:
            logger.error(
                "ペア状態の矛盾",
                pair=pair,
                verdict=outcome.verdict.value,
                experiment=experiment_index,
            )
            raise ContradictionError(
                "判定が単一の DAG から得られたものではありません", pair, experiment_index
            ) from None
    updated = state._replaced(states, (*state.history, experiment))
    logger.debug(
        "ペア格子を更新",
        intervention=experiment.intervention.sorted_members(),
        unresolved=len(updated.unresolved_pairs()),
    )
    return updated


def _collider_signature(
    response: OracleResponse, a: int, b: int, c: int
) -> bool:
    # b を含まない z で a ⊥ c | z かつ a ⊥̸ c | z ∪ {b}
    others = [v for v in range(response.n) if v not in (a, b, c)]
    for k in range(1 << len(others)):
        z = {others[i] for i in iter_bits(k)}
        if response.is_independent(a, c, z) and not response.is_independent(
            a, c, z | {b}
        ):
            return True
    return False


def apply_collider_rule(
    state: KnowledgeState,
    response: OracleResponse,
    experiment_index: int | None = None,
) -> KnowledgeState:
    """非介入変数上の非遮蔽合流点に向けて辺を向ける（任意の強化モード）"""
    if response.n != state.n:
        raise ArgumentError(f"応答の n={response.n} が状態の n={state.n} と一致しません")
    mask = response.experiment.intervention.mask
    free = [v for v in range(state.n) if not mask >> v & 1]
    states = dict(state.pair_states)
    for b in free:
        for a, c in combinations([v for v in free if v != b], 2):
            if state.state(a, c).possibilities != {PairRelation.NO_EDGE}:
                continue
            if PairRelation.NO_EDGE in state.state(a, b).possibilities:
                continue
            if PairRelation.NO_EDGE in state.state(c, b).possibilities:
                continue
            if not _collider_signature(response, a, b, c):
                continue
            logger.debug("非遮蔽合流点を検出", collider=b, parents=(a, c))
            for parent in (a, c):
                pair, relation = edge_relation(parent, b)
                try:
                    states[pair] = states[pair].narrowed(frozenset({relation}))
                except ContradictionError:
                    raise ContradictionError(
                        "合流点規則が既存の知識と矛盾しました", pair, experiment_index
                    ) from None
    return state._replaced(states, state.history)


def extract_dag(state: KnowledgeState) -> Dag:
    """全ペアが確定した状態から DAG を組み立てる"""
    unresolved = state.unresolved_pairs()
    if unresolved:
        raise NotResolvedError(unresolved)
    edges: list[Pair] = []
    for (x, y), pair_state in sorted(state.pair_states.items()):
        if pair_state.relation == PairRelation.FORWARD:
            edges.append((x, y))
        elif pair_state.relation == PairRelation.BACKWARD:
            edges.append((y, x))
    try:
        return make_dag(state.n, edges)
    except CycleError as e:
        raise ContradictionError(f"確定した辺が閉路を成します: {e}") from None
