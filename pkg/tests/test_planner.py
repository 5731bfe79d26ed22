"""スケジュール生成のテスト"""

from math import ceil, log2
from types import MappingProxyType

import pytest

from intervention_planner.knowledge.pairwise import KnowledgeState, PairState
from intervention_planner.models.data import InterventionSet, PairRelation, PairTestKind, Strategy
from intervention_planner.models.errors import ArgumentError
from intervention_planner.planner.adaptive import adaptive_next, unresolved_pairs_benefiting
from intervention_planner.planner.coverage import coverage_report, two_test_sufficient
from intervention_planner.planner.schedules import (
    binary_codeword_schedule,
    build_schedule,
    ceil_log2,
    is_power_of_two,
    kmax_bound,
    kmax_schedule,
    recursive_halving_schedule,
    single_intervention_schedule,
    sufficiency_bound,
    theoretical_length,
    tight_bound,
)


def _valid_kmax_pairs(max_n: int = 64):
    for n in range(3, max_n + 1):
        for kmax in range(1, n):
            if 2 * kmax < n:
                yield n, kmax


class TestSchedules:
    """固定スケジュールのテスト"""

    def test_helpers(self):
        """⌈log₂ n⌉ と2の冪の判定"""
        assert [ceil_log2(n) for n in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]
        assert is_power_of_two(8)
        assert not is_power_of_two(10)

    def test_single(self):
        """n-1 回の1変数介入"""
        assert single_intervention_schedule(3).member_lists() == [[0], [1]]
        assert single_intervention_schedule(5).length == 4
        with pytest.raises(ArgumentError):
            single_intervention_schedule(1)

    def test_binary_eight(self):
        """n=8 の符号語スケジュール"""
        schedule = binary_codeword_schedule(8)
        assert schedule.member_lists() == [
            [1, 3, 5, 7],
            [2, 3, 6, 7],
            [4, 5, 6, 7],
            [],
        ]

    def test_binary_two(self):
        """n=2 は符号語規則どおり変数 1 に介入してから受動観測"""
        assert binary_codeword_schedule(2).member_lists() == [[1], []]

    def test_binary_non_power(self):
        """2の冪でなければ受動観測を付けない"""
        schedule = binary_codeword_schedule(10)
        assert schedule.length == 4
        assert all(not e.is_null for e in schedule.experiments)

    @pytest.mark.parametrize("n", range(2, 65))
    def test_length_laws(self, n):
        """長さは ⌈log₂ n⌉ + [n が2の冪]"""
        expected = ceil(log2(n)) + int(n & (n - 1) == 0)
        assert binary_codeword_schedule(n).length == expected
        assert recursive_halving_schedule(n).length == expected
        assert tight_bound(n) == expected
        assert single_intervention_schedule(n).length == n - 1

    @pytest.mark.parametrize("n", range(2, 65))
    def test_no_variable_in_every_experiment(self, n):
        """全実験に介入される変数はない"""
        for schedule in (binary_codeword_schedule(n), recursive_halving_schedule(n)):
            masks = schedule.masks()
            always = (1 << n) - 1
            for mask in masks:
                always &= mask
            assert always == 0

    @pytest.mark.parametrize("n", range(2, 65))
    def test_coverage(self, n):
        """2検定基準を全ペアが満たす"""
        assert coverage_report(binary_codeword_schedule(n)).overall_sufficient
        assert coverage_report(recursive_halving_schedule(n)).overall_sufficient
        if n >= 3:
            assert coverage_report(single_intervention_schedule(n)).overall_sufficient

    def test_single_two_is_insufficient(self):
        """n=2 の単一介入は向きしか調べられない"""
        report = coverage_report(single_intervention_schedule(2))
        assert not report.overall_sufficient
        assert report.insufficient_pairs() == [(0, 1)]
        assert report.pairs[0].kinds == [PairTestKind.DIRECTIONAL_FROM_X]

    def test_halving_three(self):
        """n=3 の二分スケジュール"""
        assert recursive_halving_schedule(3).member_lists() == [[0], [1]]


class TestKmaxSchedule:
    """介入サイズ制限付きスケジュールのテスト"""

    def test_known_lengths(self):
        """(8,2) → 5, (16,4) → 7, (12,3) → 7 以下"""
        assert kmax_schedule(8, 2).length == 5
        assert kmax_schedule(16, 4).length == 7
        assert kmax_schedule(12, 3).length <= 7

    def test_bound(self):
        """理論値と厳密性"""
        assert kmax_bound(8, 2) == (5, True)
        assert kmax_bound(16, 4) == (7, True)
        assert kmax_bound(12, 3) == (7, True)
        assert kmax_bound(10, 3) == (7, False)

    @pytest.mark.parametrize("n,kmax", list(_valid_kmax_pairs()))
    def test_invariants(self, n, kmax):
        """サイズ上限と理論値"""
        schedule = kmax_schedule(n, kmax)
        bound, exact = kmax_bound(n, kmax)

        assert all(e.intervention.size <= kmax for e in schedule.experiments)
        assert schedule.length <= bound
        if exact:
            assert schedule.length == bound

    @pytest.mark.parametrize("n,kmax", list(_valid_kmax_pairs()))
    def test_coverage(self, n, kmax):
        """全ペアが2検定基準を満たす"""
        assert coverage_report(kmax_schedule(n, kmax)).overall_sufficient

    def test_invalid_kmax(self):
        """kmax >= n/2 は符号語スケジュールを使うよう促す"""
        with pytest.raises(ArgumentError) as excinfo:
            kmax_schedule(8, 4)
        assert "binary_codeword_schedule" in str(excinfo.value)
        with pytest.raises(ArgumentError):
            kmax_schedule(8, 0)


class TestBuildSchedule:
    """戦略名からの生成テスト"""

    def test_dispatch(self):
        """戦略ごとの生成と理論値"""
        assert build_schedule(8, Strategy.BINARY).length == 4
        assert build_schedule(8, Strategy.HALVING).length == 4
        assert build_schedule(3, Strategy.SINGLE).length == 2
        assert build_schedule(8, Strategy.KMAX, 2).length == 5
        assert theoretical_length(8, Strategy.KMAX, 2) == 5
        assert theoretical_length(3, Strategy.SINGLE) == 2
        assert sufficiency_bound(8) == 4

    def test_kmax_combination(self):
        """kmax は kmax 戦略のときだけ必要"""
        with pytest.raises(ArgumentError):
            build_schedule(8, Strategy.KMAX)
        with pytest.raises(ArgumentError):
            build_schedule(8, Strategy.BINARY, 2)


class TestCoverage:
    """カバレッジ判定のテスト"""

    def test_two_test_criterion(self):
        """逆向き2回、または方向と隣接"""
        x, y = PairTestKind.DIRECTIONAL_FROM_X, PairTestKind.DIRECTIONAL_FROM_Y
        adjacency, zero = PairTestKind.ADJACENCY, PairTestKind.ZERO_INFORMATION

        assert two_test_sufficient([x, y])
        assert two_test_sufficient([adjacency, y])
        assert not two_test_sufficient([x, x])
        assert not two_test_sufficient([adjacency, zero])
        assert not two_test_sufficient([])


class TestAdaptive:
    """適応的な実験選択のテスト"""

    def test_directional_test_for_open_pair(self):
        """{0→1, 辺なし} が残るペアには変数 0 に介入する"""
        states = {
            (0, 1): PairState(frozenset({PairRelation.FORWARD, PairRelation.NO_EDGE}))
        }
        state = KnowledgeState(2, MappingProxyType(states))
        assert adaptive_next(state) == InterventionSet.of([0])

    def test_resolved_returns_null(self):
        """全ペア確定なら空集合"""
        states = {(0, 1): PairState(frozenset({PairRelation.NO_EDGE}))}
        state = KnowledgeState(2, MappingProxyType(states))
        assert adaptive_next(state).size == 0

    def test_fresh_state_uses_cap(self):
        """初期状態 n=4, kmax=2 では2変数に介入する"""
        proposal = adaptive_next(KnowledgeState.fresh(4), kmax=2)
        assert proposal.size == 2
        assert proposal == InterventionSet.of([0, 1])

    def test_proposal_benefits_pairs(self):
        """提案は少なくとも1つの未確定ペアに有用"""
        state = KnowledgeState.fresh(5)
        proposal = adaptive_next(state, kmax=1)
        assert proposal.size == 1
        assert unresolved_pairs_benefiting(state, proposal)

    def test_greedy_for_large_n(self):
        """全候補評価の上限を超えると貪欲に構成する"""
        proposal = adaptive_next(KnowledgeState.fresh(18), kmax=3, exhaustive_max_n=4)
        assert 1 <= proposal.size <= 3

    def test_invalid_kmax(self):
        """kmax は1以上"""
        with pytest.raises(ArgumentError):
            adaptive_next(KnowledgeState.fresh(3), kmax=0)
