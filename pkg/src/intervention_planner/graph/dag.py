"""DAG表現・列挙・操作グラフ・d分離"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

import networkx as nx
import numpy as np
import structlog

from ..models.data import InterventionSet, Pair, PairRelation
from ..models.errors import (
    ArgumentError,
    CycleError,
    DuplicateEdgeError,
    EndpointOutOfRangeError,
    EnumerationCapError,
    SelfLoopError,
)

logger = structlog.get_logger(__name__)

# n=5 で 29,281 個
DEFAULT_ENUMERATION_CAP = 5


def iter_bits(mask: int) -> Iterator[int]:
    """ビットマスク中の立っているビット位置を昇順に返す"""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class Dag:
    """N 変数上の有向非巡回グラフ（変数は 0 始まりの整数）"""
    n: int
    edges: frozenset[Pair]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ArgumentError(f"変数の数は1以上である必要があります: n={self.n}")
        for parent, child in self.edges:
            if not (0 <= parent < self.n and 0 <= child < self.n):
                raise EndpointOutOfRangeError((parent, child), self.n)
            if parent == child:
                raise SelfLoopError(parent)
        graph = self.to_networkx()
        if not nx.is_directed_acyclic_graph(graph):
            raise CycleError(nx.find_cycle(graph))

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph

    @cached_property
    def parent_masks(self) -> tuple[int, ...]:
        masks = [0] * self.n
        for parent, child in self.edges:
            masks[child] |= 1 << parent
        return tuple(masks)

    @cached_property
    def child_masks(self) -> tuple[int, ...]:
        masks = [0] * self.n
        for parent, child in self.edges:
            masks[parent] |= 1 << child
        return tuple(masks)

    @cached_property
    def sorted_edges(self) -> list[Pair]:
        return sorted(self.edges)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2

    def has_edge(self, parent: int, child: int) -> bool:
        return (parent, child) in self.edges

    def adjacent(self, x: int, y: int) -> bool:
        return (x, y) in self.edges or (y, x) in self.edges

    def relation(self, x: int, y: int) -> PairRelation:
        """ペア (x < y) の関係"""
        if (x, y) in self.edges:
            return PairRelation.FORWARD
        if (y, x) in self.edges:
            return PairRelation.BACKWARD
        return PairRelation.NO_EDGE

    def __str__(self) -> str:
        arrows = ", ".join(f"{p}->{c}" for p, c in self.sorted_edges)
        return f"Dag(n={self.n}, {{{arrows}}})"


def make_dag(n: int, edges: Iterable[Pair]) -> Dag:
    """辺リストから検証済み DAG を構築"""
    if n < 1:
        raise ArgumentError(f"変数の数は1以上である必要があります: n={n}")
    seen: set[Pair] = set()
    for raw in edges:
        parent, child = int(raw[0]), int(raw[1])
        edge = (parent, child)
        if not (0 <= parent < n and 0 <= child < n):
            raise EndpointOutOfRangeError(edge, n)
        if parent == child:
            raise SelfLoopError(parent)
        if edge in seen:
            raise DuplicateEdgeError(edge)
        seen.add(edge)
    return Dag(n, frozenset(seen))


def complete_dag(order: Sequence[int]) -> Dag:
    """指定したトポロジカル順序に沿った完全 DAG"""
    edges = frozenset(
        (order[i], order[j])
        for i in range(len(order))
        for j in range(i + 1, len(order))
    )
    return Dag(len(order), edges)


def enumerate_dags(n: int, max_n: int = DEFAULT_ENUMERATION_CAP) -> tuple[Dag, ...]:
    """n 頂点上のラベル付き DAG を決定的な順序で全列挙"""
    if n < 1:
        raise ArgumentError(f"変数の数は1以上である必要があります: n={n}")
    if n > max_n:
        logger.warning("列挙上限を超えた要求を拒否", n=n, cap=max_n)
        raise EnumerationCapError(n, max_n)
    return _enumerate(n)


@lru_cache(maxsize=None)
def _enumerate(n: int) -> tuple[Dag, ...]:
    # 各非順序ペアに {辺なし, 小→大, 大→小} の3状態を割り当てる
    pairs = list(combinations(range(n), 2))
    dags: list[Dag] = []
    for states in product((0, 1, 2), repeat=len(pairs)):
        edges: set[Pair] = set()
        for (a, b), state in zip(pairs, states):
            if state == 1:
                edges.add((a, b))
            elif state == 2:
                edges.add((b, a))
        try:
            dags.append(Dag(n, frozenset(edges)))
        except CycleError:
            continue
    logger.debug("DAG列挙完了", n=n, count=len(dags))
    return tuple(dags)


def manipulated_graph(g: Dag, intervention: InterventionSet) -> Dag:
    """介入対象に入る辺をすべて取り除いたグラフ"""
    intervention.validate_for(g.n)
    members = intervention.members
    return Dag(g.n, frozenset(e for e in g.edges if e[1] not in members))


def _ancestral_mask(parent_masks: Sequence[int], zmask: int) -> int:
    result = zmask
    frontier = zmask
    while frontier:
        reached = 0
        for v in iter_bits(frontier):
            reached |= parent_masks[v]
        frontier = reached & ~result
        result |= reached
    return result


def separated_by_mask(
    parent_masks: Sequence[int],
    child_masks: Sequence[int],
    x: int,
    y: int,
    zmask: int,
) -> bool:
    """Bayes-ball による到達可能性判定（前提: x, y ∉ z）"""
    ancestral = _ancestral_mask(parent_masks, zmask)
    seen_up = 0
    seen_down = 0
    # upward=True は子から到達した状態
    stack: list[tuple[int, bool]] = [(x, True)]
    while stack:
        v, upward = stack.pop()
        bit = 1 << v
        if upward:
            if seen_up & bit:
                continue
            seen_up |= bit
        else:
            if seen_down & bit:
                continue
            seen_down |= bit
        if v == y:
            return False
        observed = zmask & bit
        if upward:
            if not observed:
                stack.extend((p, True) for p in iter_bits(parent_masks[v]))
                stack.extend((c, False) for c in iter_bits(child_masks[v]))
        else:
            if not observed:
                stack.extend((c, False) for c in iter_bits(child_masks[v]))
            if ancestral & bit:
                stack.extend((p, True) for p in iter_bits(parent_masks[v]))
    return True


def _check_query(g: Dag, x: int, y: int, z: Iterable[int]) -> frozenset[int]:
    conditioning = frozenset(z)
    for v in (x, y, *conditioning):
        if not 0 <= v < g.n:
            raise ArgumentError(f"変数が範囲外です: {v} (n={g.n})")
    if x == y:
        raise ArgumentError(f"x と y は異なる必要があります: {x}")
    if x in conditioning or y in conditioning:
        raise ArgumentError(
            f"条件付け集合に x または y が含まれています: x={x}, y={y}, z={sorted(conditioning)}"
        )
    return conditioning


def d_separated(g: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """x と y が z を所与として d 分離されているか"""
    conditioning = _check_query(g, x, y, z)
    zmask = 0
    for v in conditioning:
        zmask |= 1 << v
    return separated_by_mask(g.parent_masks, g.child_masks, x, y, zmask)


def d_separated_by_paths(g: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """全単純路を列挙して遮断を直接判定する d 分離（検証用の総当たり実装）"""
    conditioning = _check_query(g, x, y, z)
    graph = g.to_networkx()
    opened = {
        v for v in range(g.n)
        if v in conditioning or nx.descendants(graph, v) & conditioning
    }
    for path in nx.all_simple_paths(graph.to_undirected(), x, y):
        blocked = False
        for a, m, b in zip(path, path[1:], path[2:]):
            collider = g.has_edge(a, m) and g.has_edge(b, m)
            if (collider and m not in opened) or (not collider and m in conditioning):
                blocked = True
                break
        if not blocked:
            return False
    return True


def random_dag(n: int, edge_prob: float, seed: int) -> Dag:
    """乱数置換をトポロジカル順序とし、前向きペアを確率 edge_prob で採用"""
    if not 0.0 <= edge_prob <= 1.0:
        raise ArgumentError(f"edge_prob は [0, 1] の範囲である必要があります: {edge_prob}")
    rng = np.random.default_rng(seed)
    order = [int(v) for v in rng.permutation(n)]
    edges: set[Pair] = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.add((order[i], order[j]))
    return Dag(n, frozenset(edges))
