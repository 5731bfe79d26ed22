"""条件付き独立オラクル

真の DAG と介入集合から、操作グラフが含意する条件付き独立関係を返す。
ペアごとの検定種別（方向検定・隣接検定・無情報検定）の分類もここで行う。
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from math import comb

import structlog

from ..models.data import Experiment, PairOutcome, PairTestKind, Verdict
from ..models.errors import ArgumentError, ResponseSizeError
from .dag import Dag, iter_bits, manipulated_graph, separated_by_mask

logger = structlog.get_logger(__name__)

# 120 ペア × 2^14 条件付け集合
DEFAULT_RESPONSE_CAP = 16

Query = tuple[int, int, int]


@dataclass(frozen=True)
class CiStatement:
    """条件付き独立文 x ⊥ y | z（independent=False なら従属）"""
    x: int
    y: int
    z: frozenset[int]
    independent: bool

    def __post_init__(self) -> None:
        if self.x >= self.y:
            raise ArgumentError(f"ペアは x < y の順である必要があります: ({self.x},{self.y})")
        if self.x in self.z or self.y in self.z:
            raise ArgumentError("条件付け集合に x または y が含まれています")


@lru_cache(maxsize=None)
def queries(n: int) -> tuple[Query, ...]:
    """正準順序の (x, y, z マスク) 列。ペアは辞書順、z は他変数上の部分集合を昇順"""
    result: list[Query] = []
    for x, y in combinations(range(n), 2):
        others = [v for v in range(n) if v != x and v != y]
        for k in range(1 << len(others)):
            zmask = 0
            for i, v in enumerate(others):
                if k >> i & 1:
                    zmask |= 1 << v
            result.append((x, y, zmask))
    return tuple(result)


@lru_cache(maxsize=1 << 16)
def _separations(n: int, edges: frozenset[tuple[int, int]]) -> tuple[bool, ...]:
    graph = Dag(n, edges)
    parents, children = graph.parent_masks, graph.child_masks
    return tuple(
        separated_by_mask(parents, children, x, y, zmask)
        for x, y, zmask in queries(n)
    )


def response_bits(g: Dag, mask: int) -> tuple[bool, ...]:
    """介入マスクに対する全独立性判定（queries(n) の順）"""
    edges = frozenset(e for e in g.edges if not mask >> e[1] & 1)
    return _separations(g.n, edges)


@dataclass(frozen=True)
class OracleResponse:
    """1実験に対するオラクルの完全な応答"""
    n: int
    experiment: Experiment
    statements: tuple[CiStatement, ...]

    @cached_property
    def bits(self) -> tuple[bool, ...]:
        return tuple(s.independent for s in self.statements)

    @cached_property
    def _lookup(self) -> dict[Query, bool]:
        return {q: bit for q, bit in zip(queries(self.n), self.bits)}

    def is_independent(self, x: int, y: int, z: frozenset[int] | set[int] = frozenset()) -> bool:
        a, b = min(x, y), max(x, y)
        zmask = 0
        for v in z:
            zmask |= 1 << v
        return self._lookup[(a, b, zmask)]

    def same_statements(self, other: "OracleResponse") -> bool:
        return self.n == other.n and self.bits == other.bits


def run_experiment(
    g: Dag, experiment: Experiment, max_response_n: int = DEFAULT_RESPONSE_CAP
) -> OracleResponse:
    """操作グラフ上の全条件付き独立文を返す"""
    experiment.intervention.validate_for(g.n)
    if g.n > max_response_n:
        logger.warning("オラクル応答の上限を超えた要求を拒否", n=g.n, cap=max_response_n)
        raise ResponseSizeError(g.n, max_response_n)
    bits = response_bits(g, experiment.intervention.mask)
    statements = tuple(
        CiStatement(x, y, frozenset(iter_bits(zmask)), bit)
        for (x, y, zmask), bit in zip(queries(g.n), bits)
    )
    return OracleResponse(g.n, experiment, statements)


def kind_for(x: int, y: int, mask: int) -> PairTestKind:
    """介入マスクに対するペア (x < y) の検定種別"""
    x_in = bool(mask >> x & 1)
    y_in = bool(mask >> y & 1)
    if x_in and y_in:
        return PairTestKind.ZERO_INFORMATION
    if x_in:
        return PairTestKind.DIRECTIONAL_FROM_X
    if y_in:
        return PairTestKind.DIRECTIONAL_FROM_Y
    return PairTestKind.ADJACENCY


def _verdict(kind: PairTestKind, forward: bool, backward: bool) -> Verdict:
    if kind == PairTestKind.DIRECTIONAL_FROM_X:
        return Verdict.EDGE_X_TO_Y if forward else Verdict.NO_EDGE_FROM_X
    if kind == PairTestKind.DIRECTIONAL_FROM_Y:
        return Verdict.EDGE_Y_TO_X if backward else Verdict.NO_EDGE_FROM_Y
    if kind == PairTestKind.ADJACENCY:
        return Verdict.ADJACENT if forward or backward else Verdict.NOT_ADJACENT
    return Verdict.NONE


def pair_outcomes(g: Dag, experiment: Experiment) -> list[PairOutcome]:
    """全ペアの検定種別と判定（ペア数に線形、応答サイズ上限なし）"""
    manipulated = manipulated_graph(g, experiment.intervention)
    mask = experiment.intervention.mask
    outcomes: list[PairOutcome] = []
    for x, y in combinations(range(g.n), 2):
        kind = kind_for(x, y, mask)
        verdict = _verdict(
            kind, manipulated.has_edge(x, y), manipulated.has_edge(y, x)
        )
        outcomes.append(PairOutcome(x=x, y=y, kind=kind, verdict=verdict))
    return outcomes


def outcomes_from_response(response: OracleResponse) -> list[PairOutcome]:
    """応答の独立文だけから判定を再計算する（隣接 ⟺ どの条件付けでも従属）"""
    adjacent: dict[tuple[int, int], bool] = {}
    for (x, y, _), bit in zip(queries(response.n), response.bits):
        adjacent[(x, y)] = adjacent.get((x, y), True) and not bit
    mask = response.experiment.intervention.mask
    outcomes: list[PairOutcome] = []
    for x, y in combinations(range(response.n), 2):
        kind = kind_for(x, y, mask)
        linked = adjacent[(x, y)]
        # 方向検定では介入側から出る辺しか残らない
        verdict = _verdict(
            kind,
            linked and kind != PairTestKind.DIRECTIONAL_FROM_Y,
            linked and kind != PairTestKind.DIRECTIONAL_FROM_X,
        )
        outcomes.append(PairOutcome(x=x, y=y, kind=kind, verdict=verdict))
    return outcomes


def count_test_kinds(n: int, k: int) -> tuple[int, int, int]:
    """k 変数介入の (方向検定数, 隣接検定数, 無情報検定数)"""
    if not 0 <= k <= n:
        raise ArgumentError(f"0 <= k <= n である必要があります: n={n}, k={k}")
    return k * (n - k), comb(n - k, 2), comb(k, 2)
