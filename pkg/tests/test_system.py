"""InterventionPlannerSystem のテスト"""

import pytest

from intervention_planner.config.settings import Settings
from intervention_planner.core.system import InterventionPlannerSystem
from intervention_planner.graph.dag import enumerate_dags, make_dag, random_dag
from intervention_planner.models.data import (
    Engine,
    RunStatus,
    Schedule,
    Strategy,
    VerificationVerdict,
    VerifyMode,
)
from intervention_planner.models.errors import (
    ArgumentError,
    ContradictionError,
    EnumerationCapError,
)


class TestSimulate:
    """シミュレーションのテスト"""

    def test_worked_example_both_engines(self, system, worked_example):
        """V1, V2 の順の介入で G を回復し、整合集合は 2 → 1"""
        result = system.simulate(worked_example, Schedule.of(3, [[0], [1]]), engine=Engine.BOTH)

        assert result.status == RunStatus.RECOVERED
        assert result.recovered_edges == worked_example.sorted_edges
        assert [step.consistent_set_size for step in result.steps] == [2, 1]
        assert result.experiment_count == 2
        assert result.knowledge is not None and result.knowledge.resolved

    def test_passive_empty_graph_exact(self, system):
        """空グラフは受動観測1回で回復する"""
        result = system.simulate(make_dag(3, []), Schedule.of(3, [[]]), engine=Engine.EXACT)

        assert result.status == RunStatus.RECOVERED
        assert result.recovered_edges == []
        assert result.knowledge is None
        assert result.consistent_set_size == 1

    def test_random_binary_pairwise(self, system):
        """n=10 の乱数 DAG は符号語スケジュール4回で回復する"""
        dag = random_dag(10, 0.5, 7)
        result = system.simulate(
            dag, system.plan(10, Strategy.BINARY), strategy=Strategy.BINARY, seed=7
        )

        assert result.status == RunStatus.RECOVERED
        assert result.experiment_count == 4
        assert result.recovered_edges == dag.sorted_edges
        assert result.strategy == "binary"

    def test_unresolved(self, system):
        """不十分なスケジュールでは未確定のまま"""
        result = system.simulate(make_dag(2, []), Schedule.of(2, [[0]]))

        assert result.status == RunStatus.UNRESOLVED
        assert result.recovered_edges is None
        assert result.steps[0].unresolved_pairs == 1

    def test_contradiction_located_at_last_experiment(self, system, worked_example, monkeypatch):
        """実験番号のない矛盾は最後に実行した実験に帰属する"""

        def _cyclic(_state):
            raise ContradictionError("確定した辺が閉路を成します")

        monkeypatch.setattr("intervention_planner.core.system.extract_dag", _cyclic)
        result = system.simulate(worked_example, Schedule.of(3, [[0], [1]]))

        assert result.status == RunStatus.CONTRADICTION
        assert result.recovered_edges is None
        assert result.message is not None and "experiment=1" in result.message

    def test_collider_rule(self, system):
        """合流点規則で v 構造を受動観測1回で回復"""
        dag = make_dag(3, [(0, 2), (1, 2)])
        schedule = Schedule.of(3, [[]])

        assert system.simulate(dag, schedule).status == RunStatus.UNRESOLVED
        result = system.simulate(dag, schedule, collider_rule=True)
        assert result.status == RunStatus.RECOVERED
        assert result.collider_rule is True

    @pytest.mark.parametrize("n", [2, 3])
    def test_adaptive_recovers_all(self, system, n):
        """適応モードは全 DAG を回復する"""
        for dag in enumerate_dags(n):
            result = system.simulate(dag, adaptive=True, engine=Engine.BOTH)
            assert result.status == RunStatus.RECOVERED
            assert result.recovered_edges == dag.sorted_edges

    def test_adaptive_respects_kmax(self, system):
        """適応モードでも介入サイズ上限を守る"""
        dag = random_dag(8, 0.5, 11)
        result = system.simulate(dag, adaptive=True, kmax=2)

        assert result.status == RunStatus.RECOVERED
        assert all(len(step.intervention) <= 2 for step in result.steps)

    def test_worst_case(self, system):
        """最悪ケース DAG も十分なスケジュールなら回復する"""
        schedule = system.plan(4, Strategy.BINARY)
        dag = system.worst_case_dag(schedule)
        result = system.simulate(dag, schedule, engine=Engine.BOTH)

        assert dag.is_complete
        assert result.status == RunStatus.RECOVERED

    def test_argument_errors(self, system, worked_example):
        """不正な組み合わせは拒否される"""
        with pytest.raises(ArgumentError):
            system.simulate(worked_example)
        with pytest.raises(ArgumentError):
            system.simulate(worked_example, Schedule.of(4, [[0]]))
        with pytest.raises(ArgumentError):
            system.simulate(worked_example, Schedule.of(3, [[0, 1]]), kmax=1)

    def test_exact_cap(self, system):
        """厳密エンジンは列挙上限を超えると拒否"""
        with pytest.raises(EnumerationCapError):
            system.simulate(random_dag(6, 0.5, 0), Schedule.of(6, [[0]]), engine=Engine.EXACT)


class TestVerify:
    """検証のテスト"""

    def test_four_both(self, system):
        """n=4 は十分性・必要性とも長さ 3 で一致"""
        report = system.verify(4, 3)

        assert report.verdict == VerificationVerdict.MATCH
        assert report.theoretical_length == 3
        assert report.sufficiency is not None
        assert report.sufficiency.identifies_all
        assert report.sufficiency.length == 3
        assert report.necessity is not None
        assert report.necessity.length == 3
        assert report.directional_cover_length == 2

    def test_three_necessity(self, system):
        """n=3 の必要性のみ"""
        report = system.verify(3, 2, mode=VerifyMode.NECESSITY)

        assert report.sufficiency is None
        assert report.necessity is not None
        assert report.necessity.length == 2
        assert report.verdict == VerificationVerdict.MATCH

    def test_two_within_short_bound(self, system):
        """n=2, 長さ 1 までは見つからないが不一致ではない"""
        report = system.verify(2, 1, mode=VerifyMode.NECESSITY)

        assert report.necessity is not None
        assert report.necessity.length is None
        assert report.necessity.refuted_length == 1
        assert report.verdict == VerificationVerdict.MATCH

    def test_kmax(self, system):
        """kmax=1 の n=4 は 3"""
        report = system.verify(4, 4, kmax=1)

        assert report.theoretical_length == 3
        assert report.bound_exact
        assert report.sufficiency is not None
        assert report.sufficiency.strategy == Strategy.KMAX
        assert report.verdict == VerificationVerdict.MATCH

    def test_adaptive_search(self, tmp_path, monkeypatch):
        """設定で適応探索を有効にできる"""
        monkeypatch.chdir(tmp_path)
        settings = Settings(verifier={"adaptive_search": True})
        report = InterventionPlannerSystem(settings).verify(3, 3, mode=VerifyMode.NECESSITY)

        assert report.adaptive_length == 2
        assert report.verdict == VerificationVerdict.MATCH

    def test_cap(self, system):
        """列挙上限を超える n は拒否"""
        with pytest.raises(EnumerationCapError) as excinfo:
            system.verify(6, 3)
        assert excinfo.value.cap == 5


class TestBench:
    """ベンチマークのテスト"""

    def test_single_complete_graphs(self, system):
        """n=3 の完全グラフ 25 個を単一介入2回で回復"""
        summary = system.bench(3, 25, 1.0, 0, Strategy.SINGLE)

        assert summary.recovered == 25
        assert summary.recovery_rate == 1.0
        assert summary.max_experiments == 2
        assert summary.engine == Engine.BOTH
        assert summary.coverage_sufficient is True

    @pytest.mark.parametrize(
        "n,strategy,kmax,length",
        [
            (16, Strategy.BINARY, None, 5),
            (16, Strategy.KMAX, 4, 7),
            (8, Strategy.KMAX, 2, 5),
            (12, Strategy.KMAX, 3, 7),
        ],
    )
    def test_recovery_at_bound(self, system, n, strategy, kmax, length):
        """乱数 DAG 100 個を理論値どおりの実験数で回復"""
        summary = system.bench(n, 100, 0.5, 1, strategy, kmax)

        assert summary.recovered == 100
        assert summary.max_experiments == length
        assert summary.theoretical_length == length
        assert summary.engine == Engine.PAIRWISE

    @pytest.mark.parametrize("n", [6, 8])
    def test_single_intervention_random(self, system, n):
        """単一介入 n-1 回で乱数 DAG 200 個を回復"""
        summary = system.bench(n, 200, 0.5, 5, Strategy.SINGLE)
        assert summary.recovery_rate == 1.0

    def test_adaptive(self, system):
        """適応モードのベンチマーク"""
        summary = system.bench(4, 10, 0.5, 3, adaptive=True)

        assert summary.recovery_rate == 1.0
        assert summary.theoretical_length is None
        assert summary.coverage_sufficient is None

    def test_deterministic(self, system):
        """同じシードなら同じ結果"""
        first = system.bench(6, 20, 0.3, 9, Strategy.BINARY)
        second = system.bench(6, 20, 0.3, 9, Strategy.BINARY)
        assert first.model_dump(exclude={"wall_time"}) == second.model_dump(exclude={"wall_time"})

    def test_invalid(self, system):
        """試行回数と戦略の検証"""
        with pytest.raises(ArgumentError):
            system.bench(3, 0, 0.5, 0, Strategy.SINGLE)
        with pytest.raises(ArgumentError):
            system.bench(3, 5, 0.5, 0)
