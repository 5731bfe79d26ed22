"""介入実験プランナー メインクラス"""

import time
from typing import Optional

import numpy as np
import structlog

from ..config.settings import Settings, load_default_config
from ..graph.dag import Dag, enumerate_dags, random_dag
from ..graph.oracle import pair_outcomes, run_experiment
from ..knowledge.consistent import ConsistentSet, update_consistent_set
from ..knowledge.pairwise import (
    KnowledgeState,
    apply_collider_rule,
    extract_dag,
    update_pairwise,
)
from ..models.data import (
    BenchSummary,
    Engine,
    Experiment,
    ExperimentStep,
    MinLengthResult,
    RunResult,
    RunStatus,
    Schedule,
    Strategy,
    SufficiencyCheck,
    VerificationReport,
    VerificationVerdict,
    VerifyMode,
)
from ..models.errors import (
    ArgumentError,
    ContradictionError,
    EnumerationCapError,
    ResponseSizeError,
)
from ..planner.adaptive import adaptive_next
from ..planner.coverage import coverage_report
from ..planner.schedules import build_schedule, kmax_bound, theoretical_length, tight_bound
from ..storage.local import LocalStorage
from ..verifier.exhaustive import (
    adversarial_dag,
    identifies_all,
    min_adaptive_length,
    min_directional_cover_length,
    min_schedule_length,
)

logger = structlog.get_logger(__name__)


class InterventionPlannerSystem:
    """計画・シミュレーション・検証・ベンチマークをまとめる"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or load_default_config()
        self.storage = LocalStorage(self.settings.storage.path)

    @property
    def max_n(self) -> int:
        return self.settings.enumeration.max_n

    def plan(self, n: int, strategy: Strategy, kmax: Optional[int] = None) -> Schedule:
        """戦略に従ってスケジュールを生成"""
        schedule = build_schedule(n, strategy, kmax)
        logger.info("スケジュールを生成", n=n, strategy=strategy.value, length=schedule.length)
        return schedule

    def enumerate(self, n: int) -> tuple[Dag, ...]:
        return enumerate_dags(n, self.max_n)

    def worst_case_dag(self, schedule: Schedule) -> Dag:
        return adversarial_dag(schedule)

    def simulate(
        self,
        dag: Dag,
        schedule: Optional[Schedule] = None,
        *,
        adaptive: bool = False,
        kmax: Optional[int] = None,
        collider_rule: Optional[bool] = None,
        engine: Engine = Engine.PAIRWISE,
        command: str = "simulate",
        strategy: Optional[Strategy] = None,
        seed: Optional[int] = None,
    ) -> RunResult:
        """真の DAG に対して実験を順に実行し、知識エンジンを更新する"""
        n = dag.n
        if schedule is None and not adaptive:
            raise ArgumentError("スケジュールか --adaptive のどちらかが必要です")
        if schedule is not None and adaptive:
            raise ArgumentError("スケジュールと --adaptive は同時に指定できません")
        if schedule is not None and schedule.n != n:
            raise ArgumentError(f"スケジュールの n={schedule.n} が DAG の n={n} と一致しません")
        if kmax is not None and kmax < 1:
            raise ArgumentError(f"kmax は1以上である必要があります: {kmax}")
        if schedule is not None and kmax is not None:
            for experiment in schedule.experiments:
                experiment.intervention.validate_for(n, kmax)

        use_exact = engine in (Engine.EXACT, Engine.BOTH)
        use_pairwise = engine in (Engine.PAIRWISE, Engine.BOTH)
        collider = (
            self.settings.knowledge.collider_rule if collider_rule is None else collider_rule
        )
        if use_exact and n > self.max_n:
            raise EnumerationCapError(n, self.max_n)
        response_cap = self.settings.oracle.max_response_n
        if (use_exact or collider) and n > response_cap:
            raise ResponseSizeError(n, response_cap)

        state = KnowledgeState.fresh(n)
        consistent = ConsistentSet.full(n, self.max_n) if use_exact else None
        executed: list[Experiment] = []
        steps: list[ExperimentStep] = []
        status = RunStatus.UNRESOLVED
        recovered: Optional[Dag] = None
        message: Optional[str] = None
        # 適応モードの上限: 全ペアが2検定を受けるのに十分な回数
        limit = n * (n - 1) + 1
        started = time.perf_counter()

        try:
            index = 0
            while True:
                if adaptive:
                    if state.resolved or index >= limit:
                        break
                    proposal = adaptive_next(
                        state, kmax, self.settings.planner.adaptive_exhaustive_max_n
                    )
                    if proposal.size == 0:
                        break
                    experiment = Experiment(intervention=proposal)
                else:
                    assert schedule is not None
                    if index >= schedule.length:
                        break
                    experiment = schedule.experiments[index]

                outcomes = pair_outcomes(dag, experiment)
                state = update_pairwise(state, outcomes, experiment, index)
                response = (
                    run_experiment(dag, experiment, response_cap)
                    if use_exact or collider
                    else None
                )
                if collider and response is not None:
                    state = apply_collider_rule(state, response, index)
                if consistent is not None and response is not None:
                    consistent = update_consistent_set(
                        consistent, experiment, response, self.max_n, index
                    )
                executed.append(experiment)
                steps.append(ExperimentStep(
                    index=index,
                    intervention=experiment.intervention.sorted_members(),
                    outcomes=outcomes if use_pairwise else None,
                    unresolved_pairs=len(state.unresolved_pairs()) if use_pairwise else None,
                    consistent_set_size=consistent.size if consistent is not None else None,
                ))
                index += 1

            pairwise_graph = extract_dag(state) if state.resolved else None
            if consistent is not None:
                exact_graph = consistent.dags(self.max_n)[0] if consistent.is_singleton else None
                if (
                    use_pairwise
                    and pairwise_graph is not None
                    and exact_graph is not None
                    and pairwise_graph != exact_graph
                ):
                    raise ContradictionError("ペア格子と整合集合が異なる DAG を示しています")
                recovered = exact_graph
            else:
                recovered = pairwise_graph
            if recovered is not None:
                status = RunStatus.RECOVERED
        except ContradictionError as e:
            # 実験番号のない矛盾は最後に実行した実験に帰属させる
            located = (
                e.with_experiment(len(executed) - 1)
                if e.experiment_index is None and executed
                else e
            )
            logger.error("シミュレーション中に矛盾を検出", dag=str(dag), error=str(located))
            status = RunStatus.CONTRADICTION
            recovered = None
            message = str(located)

        elapsed = time.perf_counter() - started
        logger.info(
            "シミュレーション完了",
            n=n,
            status=status.value,
            experiments=len(executed),
            wall_time=round(elapsed, 4),
        )
        return RunResult(
            command=command,
            n=n,
            kmax=kmax,
            strategy=strategy.value if strategy is not None else None,
            seed=seed,
            engine=engine,
            adaptive=adaptive,
            collider_rule=collider,
            true_edges=dag.sorted_edges,
            schedule=Schedule(n=n, experiments=tuple(executed)),
            steps=steps,
            status=status,
            recovered_edges=recovered.sorted_edges if recovered is not None else None,
            experiment_count=len(executed),
            knowledge=state.snapshot() if use_pairwise else None,
            consistent_set_size=consistent.size if consistent is not None else None,
            message=message,
            wall_time=elapsed,
        )

    def verify(
        self,
        n: int,
        max_len: int,
        kmax: Optional[int] = None,
        mode: VerifyMode = VerifyMode.BOTH,
    ) -> VerificationReport:
        """理論値と全探索の結果を突き合わせる"""
        if n < 2:
            raise ArgumentError(f"検証には n >= 2 が必要です: n={n}")
        if n > self.max_n:
            logger.warning("列挙上限を超えた検証要求を拒否", n=n, cap=self.max_n)
            raise EnumerationCapError(n, self.max_n)
        if kmax is not None and kmax < 1:
            raise ArgumentError(f"kmax は1以上である必要があります: {kmax}")

        started = time.perf_counter()
        restricted = kmax is not None and 2 * kmax < n
        if restricted:
            assert kmax is not None
            theoretical, exact = kmax_bound(n, kmax)
            strategy = Strategy.KMAX
        else:
            theoretical, exact = tight_bound(n), True
            strategy = Strategy.BINARY
        mismatches: list[str] = []

        sufficiency: Optional[SufficiencyCheck] = None
        if mode in (VerifyMode.SUFFICIENCY, VerifyMode.BOTH):
            schedule = build_schedule(n, strategy, kmax if restricted else None)
            identification = identifies_all(schedule, self.max_n)
            sufficiency = SufficiencyCheck(
                strategy=strategy,
                schedule=schedule,
                length=schedule.length,
                identifies_all=identification.identifies,
                witness=identification.witness,
            )
            if not identification.identifies:
                mismatches.append(f"{strategy.value} スケジュールが全 DAG を識別できません")
            if schedule.length > theoretical or (exact and schedule.length != theoretical):
                mismatches.append(
                    f"スケジュール長 {schedule.length} が理論値 {theoretical} と一致しません"
                )

        necessity: Optional[MinLengthResult] = None
        directional: Optional[int] = None
        adaptive_length: Optional[int] = None
        if mode in (VerifyMode.NECESSITY, VerifyMode.BOTH):
            necessity = min_schedule_length(
                n,
                max_len,
                kmax,
                self.max_n,
                canonicalize=self.settings.verifier.canonicalize,
            )
            found = necessity.length
            if found is None:
                if theoretical <= max_len:
                    mismatches.append(f"長さ {max_len} 以内に識別スケジュールが見つかりません")
            elif found > theoretical or (exact and found != theoretical):
                mismatches.append(f"最短長 {found} が理論値 {theoretical} と一致しません")
            directional = min_directional_cover_length(n, max_len, kmax)
            if (
                self.settings.verifier.adaptive_search
                and n <= self.settings.verifier.adaptive_search_max_n
            ):
                adaptive_length = min_adaptive_length(
                    n, max_len, kmax, self.settings.verifier.adaptive_search_max_n
                )
                if adaptive_length is not None and found is not None and adaptive_length != found:
                    mismatches.append(
                        f"適応戦略の最短手数 {adaptive_length} が非適応の {found} と異なります"
                    )

        verdict = VerificationVerdict.MISMATCH if mismatches else VerificationVerdict.MATCH
        elapsed = time.perf_counter() - started
        logger.info("検証完了", n=n, mode=mode.value, verdict=verdict.value, wall_time=round(elapsed, 3))
        return VerificationReport(
            n=n,
            max_len=max_len,
            kmax=kmax,
            mode=mode,
            theoretical_length=theoretical,
            bound_exact=exact,
            sufficiency=sufficiency,
            necessity=necessity,
            directional_cover_length=directional,
            adaptive_length=adaptive_length,
            verdict=verdict,
            mismatches=mismatches,
            wall_time=elapsed,
        )

    def bench(
        self,
        n: int,
        trials: int,
        edge_prob: float,
        seed: int,
        strategy: Optional[Strategy] = None,
        kmax: Optional[int] = None,
        adaptive: bool = False,
    ) -> BenchSummary:
        """乱数 DAG で回復率と実験回数を測る"""
        if trials < 1:
            raise ArgumentError(f"trials は1以上である必要があります: {trials}")
        if not adaptive and strategy is None:
            raise ArgumentError("--strategy か --adaptive のどちらかが必要です")

        small = n <= self.max_n and n <= self.settings.oracle.max_response_n
        engine = Engine.BOTH if small else Engine.PAIRWISE
        schedule = None if adaptive else build_schedule(n, strategy, kmax)  # type: ignore[arg-type]
        coverage = coverage_report(schedule) if schedule is not None else None
        sufficient = coverage.overall_sufficient if coverage is not None else None
        if coverage is not None and not coverage.overall_sufficient:
            logger.warning(
                "2検定基準を満たさないペアがあります",
                n=n,
                pairs=coverage.insufficient_pairs(),
            )
        bound = (
            theoretical_length(n, strategy, kmax)
            if strategy is not None and not adaptive
            else None
        )

        started = time.perf_counter()
        trial_seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=trials)
        recovered = 0
        counts: list[int] = []
        for trial_seed in trial_seeds:
            dag = random_dag(n, edge_prob, int(trial_seed))
            result = self.simulate(
                dag,
                schedule,
                adaptive=adaptive,
                kmax=kmax if adaptive else None,
                engine=engine,
                command="bench",
                strategy=strategy,
                seed=int(trial_seed),
            )
            counts.append(result.experiment_count)
            if (
                result.status == RunStatus.RECOVERED
                and result.recovered_edges == dag.sorted_edges
            ):
                recovered += 1
        elapsed = time.perf_counter() - started

        rate = recovered / trials
        if sufficient and rate < 1.0:
            logger.error("十分なカバレッジにもかかわらず回復に失敗", n=n, recovered=recovered, trials=trials)
        return BenchSummary(
            n=n,
            trials=trials,
            edge_prob=edge_prob,
            seed=seed,
            strategy=strategy.value if strategy is not None else None,
            kmax=kmax,
            adaptive=adaptive,
            engine=engine,
            theoretical_length=bound,
            coverage_sufficient=sufficient,
            recovered=recovered,
            recovery_rate=rate,
            mean_experiments=float(np.mean(counts)),
            max_experiments=int(max(counts)),
            wall_time=elapsed,
        )
