"""小さな n での全列挙による検証

全 DAG × 全介入マスクの応答クラス表を一度だけ作り、
スケジュールの識別可能性・最短長・適応戦略の最短手数をその表の上で判定する。
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterable, Optional

import numpy as np
import structlog

from ..graph.dag import DEFAULT_ENUMERATION_CAP, Dag, complete_dag, enumerate_dags
from ..graph.oracle import pair_outcomes, response_bits, run_experiment
from ..knowledge.consistent import ConsistentSet, dag_index, update_consistent_set
from ..knowledge.pairwise import KnowledgeState, extract_dag, update_pairwise
from ..models.data import (
    IdentificationResult,
    MinLengthResult,
    Refutation,
    Schedule,
    Witness,
)
from ..models.errors import ArgumentError, ContradictionError, EnumerationCapError
from ..planner.coverage import coverage_report
from ..storage.formats import format_dag

logger = structlog.get_logger(__name__)

DEFAULT_ADAPTIVE_MAX_N = 3


@dataclass(frozen=True)
class ResponseTable:
    """classes[i, mask] は DAG i の介入 mask に対する応答クラス番号（列ごとに採番）"""
    n: int
    dags: tuple[Dag, ...]
    classes: np.ndarray

    @property
    def size(self) -> int:
        return len(self.dags)


@lru_cache(maxsize=None)
def _response_table(n: int) -> ResponseTable:
    dags = enumerate_dags(n, max_n=n)
    classes = np.zeros((len(dags), 1 << n), dtype=np.int32)
    for mask in range(1 << n):
        interned: dict[tuple[bool, ...], int] = {}
        for i, g in enumerate(dags):
            classes[i, mask] = interned.setdefault(response_bits(g, mask), len(interned))
    classes.setflags(write=False)
    logger.debug("応答クラス表を構築", n=n, dags=len(dags))
    return ResponseTable(n, dags, classes)


def response_table(n: int, max_n: int = DEFAULT_ENUMERATION_CAP) -> ResponseTable:
    if n > max_n:
        logger.warning("列挙上限を超えた検証要求を拒否", n=n, cap=max_n)
        raise EnumerationCapError(n, max_n)
    if n < 1:
        raise ArgumentError(f"変数の数は1以上である必要があります: n={n}")
    return _response_table(n)


@dataclass(frozen=True)
class SignatureTable:
    """スケジュールに対する各 DAG の応答列"""
    n: int
    schedule: Schedule
    rows: np.ndarray

    def groups(self) -> list[list[int]]:
        """同じ応答列を持つ DAG 番号の組（2個以上のもの、最小番号順）"""
        return _collisions(self.rows)


def signature_table(
    schedule: Schedule, max_n: int = DEFAULT_ENUMERATION_CAP
) -> SignatureTable:
    table = response_table(schedule.n, max_n)
    rows = table.classes[:, schedule.masks()]
    return SignatureTable(schedule.n, schedule, rows)


def _collisions(rows: np.ndarray) -> list[list[int]]:
    count = rows.shape[0]
    if rows.shape[1] == 0:
        return [list(range(count))] if count > 1 else []
    _, inverse, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    members: dict[int, list[int]] = {}
    for i, label in enumerate(inverse):
        if counts[label] > 1:
            members.setdefault(int(label), []).append(i)
    return sorted(members.values())


def _is_injective(rows: np.ndarray) -> bool:
    if rows.shape[1] == 0:
        return rows.shape[0] <= 1
    return np.unique(rows, axis=0).shape[0] == rows.shape[0]


def _witness(dags: tuple[Dag, ...], groups: list[list[int]]) -> Optional[Witness]:
    # 完全グラフを含む組を優先
    if not groups:
        return None
    for group in groups:
        complete = [i for i in group if dags[i].is_complete]
        if complete:
            first = complete[0]
            second = next(i for i in group if i != first)
            break
    else:
        first, second = groups[0][0], groups[0][1]
    first, second = min(first, second), max(first, second)
    return Witness(
        first_index=first,
        second_index=second,
        first=format_dag(dags[first]),
        second=format_dag(dags[second]),
    )


def confusion_groups(
    schedule: Schedule, max_n: int = DEFAULT_ENUMERATION_CAP
) -> list[list[Dag]]:
    """スケジュールで区別できない DAG の組"""
    table = response_table(schedule.n, max_n)
    return [[table.dags[i] for i in group] for group in signature_table(schedule, max_n).groups()]


def identifies_all(
    schedule: Schedule, max_n: int = DEFAULT_ENUMERATION_CAP
) -> IdentificationResult:
    """全 DAG の応答列が互いに異なるか"""
    table = response_table(schedule.n, max_n)
    groups = signature_table(schedule, max_n).groups()
    if not groups:
        return IdentificationResult(identifies=True)
    return IdentificationResult(identifies=False, witness=_witness(table.dags, groups))


def _candidate_masks(n: int, kmax: Optional[int]) -> list[int]:
    cap = n if kmax is None else kmax
    return [m for m in range(1 << n) if bin(m).count("1") <= cap]


@lru_cache(maxsize=None)
def _permutation_table(n: int) -> tuple[tuple[int, ...], ...]:
    table: list[tuple[int, ...]] = []
    for perm in permutations(range(n)):
        if perm == tuple(range(n)):
            continue
        images: list[int] = []
        for mask in range(1 << n):
            image = 0
            for v in range(n):
                if mask >> v & 1:
                    image |= 1 << perm[v]
            images.append(image)
        table.append(tuple(images))
    return tuple(table)


def _is_canonical(combo: tuple[int, ...], perm_table: Iterable[tuple[int, ...]]) -> bool:
    # 変数の付け替えと実験の並べ替えで得られる同値類の最小代表だけを残す
    for images in perm_table:
        if tuple(sorted(images[m] for m in combo)) < combo:
            return False
    return True


def min_schedule_length(
    n: int,
    max_len: int,
    kmax: Optional[int] = None,
    max_n: int = DEFAULT_ENUMERATION_CAP,
    canonicalize: bool = True,
) -> MinLengthResult:
    """全 DAG を識別する非適応スケジュールの最短長を全探索する

    同じ実験の繰り返しは短いスケジュールに帰着するので重複なしの組合せだけを調べる。
    """
    if max_len < 0:
        raise ArgumentError(f"max_len は0以上である必要があります: {max_len}")
    if kmax is not None and kmax < 1:
        raise ArgumentError(f"kmax は1以上である必要があります: {kmax}")
    table = response_table(n, max_n)
    candidates = _candidate_masks(n, kmax)
    perm_table = _permutation_table(n) if canonicalize else ()
    checked = 0
    refuted_length: Optional[int] = None
    refutations: list[Refutation] = []

    for length in range(max_len + 1):
        failures: list[Refutation] = []
        for combo in combinations(candidates, length):
            if canonicalize and not _is_canonical(combo, perm_table):
                continue
            checked += 1
            rows = table.classes[:, list(combo)]
            schedule = Schedule.of(n, ([v for v in range(n) if m >> v & 1] for m in combo))
            if _is_injective(rows):
                logger.info(
                    "識別スケジュールを発見",
                    n=n,
                    length=length,
                    kmax=kmax,
                    checked=checked,
                )
                return MinLengthResult(
                    n=n,
                    max_len=max_len,
                    kmax=kmax,
                    length=length,
                    example=schedule,
                    refuted_length=refuted_length,
                    refutations=refutations,
                    schedules_checked=checked,
                )
            witness = _witness(table.dags, _collisions(rows))
            if witness is not None:
                failures.append(Refutation(schedule=schedule, witness=witness))
        refuted_length, refutations = length, failures
        logger.debug("長さ L のスケジュールはすべて不十分", n=n, length=length, checked=checked)

    logger.info("探索範囲内に識別スケジュールなし", n=n, max_len=max_len, kmax=kmax)
    return MinLengthResult(
        n=n,
        max_len=max_len,
        kmax=kmax,
        refuted_length=refuted_length,
        refutations=refutations,
        schedules_checked=checked,
    )


def min_directional_cover_length(
    n: int, max_len: int, kmax: Optional[int] = None
) -> Optional[int]:
    """全ペアが少なくとも1回方向検定を受ける最短の実験数"""
    if n < 2:
        return 0
    candidates = _candidate_masks(n, kmax)
    pairs = list(combinations(range(n), 2))
    for length in range(max_len + 1):
        for combo in combinations(candidates, length):
            if all(
                any((m >> x & 1) != (m >> y & 1) for m in combo) for x, y in pairs
            ):
                return length
    return None


def min_adaptive_length(
    n: int,
    max_len: int,
    kmax: Optional[int] = None,
    max_n: int = DEFAULT_ADAPTIVE_MAX_N,
) -> Optional[int]:
    """適応戦略が最悪ケースで必要とする実験数（ゲーム木探索）"""
    if n > max_n:
        logger.warning("適応探索の上限を超えた要求を拒否", n=n, cap=max_n)
        raise EnumerationCapError(n, max_n)
    table = response_table(n, max_n=max_n)
    candidates = _candidate_masks(n, kmax)
    classes = table.classes

    @lru_cache(maxsize=None)
    def solvable(members: frozenset[int], depth: int) -> bool:
        if len(members) <= 1:
            return True
        if depth == 0:
            return False
        for mask in candidates:
            parts: dict[int, set[int]] = {}
            for i in members:
                parts.setdefault(int(classes[i, mask]), set()).add(i)
            if len(parts) == 1:
                continue
            if all(solvable(frozenset(part), depth - 1) for part in parts.values()):
                return True
        return False

    everything = frozenset(range(table.size))
    for length in range(max_len + 1):
        if solvable(everything, length):
            return length
    return None


def adversarial_dag(schedule: Schedule) -> Dag:
    """スケジュールに不利な完全 DAG

    介入される順に各変数をそれまで未介入の変数すべての子にする。
    一度も介入されない変数は先頭に置く。
    """
    first_time: dict[int, int] = {}
    for t, experiment in enumerate(schedule.experiments):
        for v in experiment.intervention.members:
            first_time.setdefault(v, t)
    order = sorted(
        range(schedule.n),
        key=lambda v: (0, 0, v) if v not in first_time else (1, -first_time[v], v),
    )
    return complete_dag(order)


def cross_check_engines(
    g: Dag, schedule: Schedule, max_n: int = DEFAULT_ENUMERATION_CAP
) -> bool:
    """2つの知識エンジンを同じスケジュールで走らせ、真の DAG と整合するか確認する"""
    if g.n != schedule.n:
        raise ArgumentError(f"DAG の n={g.n} とスケジュールの n={schedule.n} が一致しません")
    truth = dag_index(g, max_n)
    state = KnowledgeState.fresh(g.n)
    consistent = ConsistentSet.full(g.n, max_n)
    for index, experiment in enumerate(schedule.experiments):
        try:
            state = update_pairwise(state, pair_outcomes(g, experiment), experiment, index)
            response = run_experiment(g, experiment)
            consistent = update_consistent_set(consistent, experiment, response, max_n, index)
        except ContradictionError as e:
            logger.error("エンジンの矛盾", dag=str(g), error=str(e))
            raise
        if truth not in consistent.members:
            logger.warning("整合集合が真の DAG を失いました", dag=str(g), experiment=index)
            return False
        for (x, y), relation in state.resolved_pairs().items():
            if g.relation(x, y) != relation:
                logger.warning("確定したペアが真の DAG と食い違います", dag=str(g), pair=(x, y))
                return False

    if coverage_report(schedule).overall_sufficient:
        if not state.resolved or extract_dag(state) != g:
            return False
        if consistent.members != frozenset({truth}):
            return False
    return True
