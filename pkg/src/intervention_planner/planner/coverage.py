"""スケジュールのカバレッジ分析"""

from itertools import combinations
from typing import Iterable

from ..graph.oracle import kind_for
from ..models.data import CoverageReport, PairCoverage, PairTestKind, Schedule


def two_test_sufficient(kinds: Iterable[PairTestKind]) -> bool:
    """逆向きの方向検定2回、または方向検定と隣接検定が1回ずつ"""
    received = set(kinds)
    from_x = PairTestKind.DIRECTIONAL_FROM_X in received
    from_y = PairTestKind.DIRECTIONAL_FROM_Y in received
    return (from_x and from_y) or (
        (from_x or from_y) and PairTestKind.ADJACENCY in received
    )


def coverage_report(schedule: Schedule) -> CoverageReport:
    """各ペアが受けた検定種別と2検定基準の充足"""
    masks = schedule.masks()
    pairs: list[PairCoverage] = []
    for x, y in combinations(range(schedule.n), 2):
        kinds = [kind_for(x, y, mask) for mask in masks]
        pairs.append(
            PairCoverage(x=x, y=y, kinds=kinds, sufficient=two_test_sufficient(kinds))
        )
    return CoverageReport(
        n=schedule.n,
        experiment_count=schedule.length,
        pairs=pairs,
        overall_sufficient=all(p.sufficient for p in pairs),
    )
