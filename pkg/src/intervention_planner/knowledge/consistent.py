"""整合 DAG 集合の厳密な追跡"""

from dataclasses import dataclass
from functools import lru_cache

import structlog

from ..graph.dag import DEFAULT_ENUMERATION_CAP, Dag, enumerate_dags
from ..graph.oracle import OracleResponse, response_bits
from ..models.data import Experiment
from ..models.errors import ArgumentError, ContradictionError, EnumerationCapError

logger = structlog.get_logger(__name__)


@lru_cache(maxsize=None)
def _index_map(n: int) -> dict[Dag, int]:
    return {dag: i for i, dag in enumerate(enumerate_dags(n, max_n=n))}


def dag_index(g: Dag, max_n: int = DEFAULT_ENUMERATION_CAP) -> int:
    """enumerate_dags(n) における g の番号"""
    if g.n > max_n:
        raise EnumerationCapError(g.n, max_n)
    return _index_map(g.n)[g]


@dataclass(frozen=True)
class ConsistentSet:
    """これまでの全応答と整合する DAG の番号集合"""
    n: int
    members: frozenset[int]

    @classmethod
    def full(cls, n: int, max_n: int = DEFAULT_ENUMERATION_CAP) -> "ConsistentSet":
        return cls(n, frozenset(range(len(enumerate_dags(n, max_n)))))

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_singleton(self) -> bool:
        return len(self.members) == 1

    def contains(self, g: Dag, max_n: int = DEFAULT_ENUMERATION_CAP) -> bool:
        return g.n == self.n and dag_index(g, max_n) in self.members

    def dags(self, max_n: int = DEFAULT_ENUMERATION_CAP) -> list[Dag]:
        candidates = enumerate_dags(self.n, max_n)
        return [candidates[i] for i in sorted(self.members)]


def update_consistent_set(
    current: ConsistentSet,
    experiment: Experiment,
    response: OracleResponse,
    max_n: int = DEFAULT_ENUMERATION_CAP,
    experiment_index: int | None = None,
) -> ConsistentSet:
    """応答と同一の独立文集合を生む候補だけを残す"""
    if current.n > max_n:
        raise EnumerationCapError(current.n, max_n)
    if response.n != current.n:
        raise ArgumentError(f"応答の n={response.n} が集合の n={current.n} と一致しません")
    if response.experiment != experiment:
        raise ArgumentError("応答が指定の実験に対するものではありません")
    candidates = enumerate_dags(current.n, max_n)
    mask = experiment.intervention.mask
    target = response.bits
    survivors = frozenset(
        i for i in current.members if response_bits(candidates[i], mask) == target
    )
    if not survivors:
        logger.error("整合する DAG がありません", n=current.n, experiment=experiment_index)
        raise ContradictionError(
            "応答を生成できる DAG が存在しません", experiment_index=experiment_index
        )
    logger.debug(
        "整合集合を更新",
        intervention=experiment.intervention.sorted_members(),
        before=current.size,
        after=len(survivors),
    )
    return ConsistentSet(current.n, survivors)
