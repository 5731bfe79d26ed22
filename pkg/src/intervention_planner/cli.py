"""コマンドラインインターフェース

終了コード: 0 = 成功/MATCH, 1 = 使用法・引数・形式エラー, 2 = 検証の不一致, 3 = エンジンの矛盾
"""

import asyncio
import sys
from typing import Any, Awaitable, Callable, Optional, TypeVar

import click
import structlog
from pydantic import BaseModel

from .config.logging import configure_logging
from .config.settings import Settings, load_default_config
from .core.system import InterventionPlannerSystem
from .graph.dag import Dag, random_dag
from .models.data import (
    Engine,
    RunStatus,
    Schedule,
    Strategy,
    VerificationVerdict,
    VerifyMode,
)
from .models.errors import ContradictionError, InterventionPlannerError
from .planner.schedules import ceil_log2, is_power_of_two, kmax_bound, theoretical_length
from .storage.formats import format_dag, format_json

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISMATCH = 2
EXIT_CONTRADICTION = 3

# --list で全 DAG を出力できる最大の n
LIST_MAX_N = 4

T = TypeVar("T")


class PlannerGroup(click.Group):
    """使用法エラーを終了コード 1 に揃える"""

    def parse_args(self, ctx: click.Context, args: list[str]) -> list[str]:
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise


def _run(work: Callable[[], Awaitable[T]]) -> T:
    """非同期処理を実行し、ドメイン例外を終了コードに変換する"""
    try:
        return asyncio.run(work())
    except ContradictionError as e:
        click.echo(f"❌ 矛盾が検出されました: {e}", err=True)
        sys.exit(EXIT_CONTRADICTION)
    except (InterventionPlannerError, OSError) as e:
        click.echo(f"❌ エラーが発生しました: {e}", err=True)
        sys.exit(EXIT_USAGE)


def _system(ctx: click.Context) -> InterventionPlannerSystem:
    return InterventionPlannerSystem(ctx.obj)


async def _emit(system: InterventionPlannerSystem, model: BaseModel, out: Optional[str]) -> None:
    if out:
        path = await system.storage.save_result(model, out)
        click.echo(f"📄 結果を保存しました: {path}", err=True)
    else:
        click.echo(format_json(model), nl=False)


def _command_echo(ctx: click.Context) -> str:
    options = " ".join(
        f"--{name.replace('_', '-')}={value}"
        for name, value in sorted(ctx.params.items())
        if value is not None and value is not False
    )
    return f"{ctx.info_name} {options}".strip()


class _PlanSummary(BaseModel):
    path: str
    n: int
    strategy: str
    kmax: Optional[int] = None
    length: int
    bound: int
    bound_label: str
    schedule: Schedule


def bound_label(n: int, strategy: Strategy, kmax: Optional[int] = None) -> str:
    """理論値の式と値"""
    if strategy == Strategy.SINGLE:
        return f"n−1 = {n - 1}"
    if strategy == Strategy.KMAX and kmax is not None:
        value, exact = kmax_bound(n, kmax)
        relation = "=" if exact else "≤"
        return f"(⌈n/k⌉−1)+⌈n/2k⌉·⌈log₂{kmax}⌉ {relation} {value}"
    plus = "+1" if is_power_of_two(n) else ""
    return f"⌈log₂{n}⌉{plus} = {ceil_log2(n) + int(is_power_of_two(n))}"


@click.group(cls=PlannerGroup)
@click.version_option(package_name="intervention-planner")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="設定ファイルパス")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="ログレベル（設定より優先）",
)
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], log_level: Optional[str]) -> None:
    """介入実験プランナー - 因果 DAG を特定する実験スケジュールの計画・シミュレーション・検証"""
    try:
        settings: Settings = load_default_config(config_path)
    except (OSError, ValueError) as e:
        raise click.UsageError(f"設定ファイル読み込みエラー: {e}") from None
    configure_logging(log_level or settings.log_level)
    ctx.obj = settings


@cli.command()
@click.option("--n", "n", type=int, required=True, help="変数の数")
@click.option(
    "--strategy",
    type=click.Choice([s.value for s in Strategy]),
    default=Strategy.BINARY.value,
    show_default=True,
)
@click.option("--kmax", type=int, help="介入サイズの上限（kmax 戦略のみ）")
@click.option("--out", type=click.Path(dir_okay=False), help="出力ファイル")
@click.pass_context
def plan(
    ctx: click.Context,
    n: int,
    strategy: str,
    kmax: Optional[int] = None,
    out: Optional[str] = None,
) -> None:
    """スケジュールを生成して保存"""
    chosen = Strategy(strategy)
    if (chosen == Strategy.KMAX) != (kmax is not None):
        raise click.UsageError("--kmax は --strategy kmax と組み合わせてのみ指定します")

    async def _plan() -> None:
        system = _system(ctx)
        schedule = system.plan(n, chosen, kmax)
        path = await system.storage.save_schedule(schedule, out, chosen)
        click.echo(
            f"実験数 {schedule.length} / 理論値 {bound_label(n, chosen, kmax)}", err=True
        )
        click.echo(format_json(_PlanSummary(
            path=str(path),
            n=n,
            strategy=chosen.value,
            kmax=kmax,
            length=schedule.length,
            bound=theoretical_length(n, chosen, kmax),
            bound_label=bound_label(n, chosen, kmax),
            schedule=schedule,
        )), nl=False)

    _run(_plan)


@cli.command()
@click.option("--dag", "dag_path", type=click.Path(dir_okay=False), help="DAG テキストファイル")
@click.option(
    "--random",
    "random_spec",
    type=(int, float, int),
    default=None,
    metavar="N EDGE_PROB SEED",
    help="乱数 DAG",
)
@click.option("--worst-case", is_flag=True, help="スケジュールに不利な完全 DAG を使う")
@click.option("--n", "n", type=int, help="--worst-case と --strategy を併用する際の変数の数")
@click.option("--schedule", "schedule_path", type=click.Path(dir_okay=False), help="スケジュール JSON")
@click.option("--strategy", type=click.Choice([s.value for s in Strategy]), help="戦略から生成")
@click.option("--kmax", type=int, help="介入サイズの上限")
@click.option("--adaptive", is_flag=True, help="adaptive_next で逐次的に実験を選ぶ")
@click.option("--collider-rule/--no-collider-rule", default=None, help="合流点規則")
@click.option(
    "--engine",
    type=click.Choice([e.value for e in Engine]),
    default=Engine.PAIRWISE.value,
    show_default=True,
)
@click.option("--out", type=click.Path(dir_okay=False), help="結果 JSON の出力先")
@click.pass_context
def simulate(
    ctx: click.Context,
    dag_path: Optional[str],
    random_spec: Optional[tuple[int, float, int]],
    worst_case: bool,
    n: Optional[int],
    schedule_path: Optional[str],
    strategy: Optional[str],
    kmax: Optional[int],
    adaptive: bool,
    collider_rule: Optional[bool],
    engine: str,
    out: Optional[str],
) -> None:
    """真の DAG に対してスケジュールを実行"""
    sources = sum([dag_path is not None, random_spec is not None, worst_case])
    if sources != 1:
        raise click.UsageError("--dag, --random, --worst-case のいずれか1つを指定してください")
    plans = sum([schedule_path is not None, strategy is not None, adaptive])
    if plans != 1:
        raise click.UsageError("--schedule, --strategy, --adaptive のいずれか1つを指定してください")
    if worst_case and adaptive:
        raise click.UsageError("--worst-case には固定スケジュールが必要です")
    chosen = Strategy(strategy) if strategy is not None else None
    if chosen is not None and (chosen == Strategy.KMAX) != (kmax is not None):
        raise click.UsageError("--kmax は --strategy kmax と組み合わせてのみ指定します")

    async def _simulate() -> None:
        system = _system(ctx)
        seed: Optional[int] = None
        dag: Optional[Dag] = None
        if dag_path is not None:
            dag = await system.storage.load_dag(dag_path)
        elif random_spec is not None:
            size, edge_prob, seed = random_spec
            dag = random_dag(size, edge_prob, seed)

        schedule: Optional[Schedule] = None
        if schedule_path is not None:
            schedule = await system.storage.load_schedule(schedule_path)
        elif chosen is not None:
            size = dag.n if dag is not None else n
            if size is None:
                raise click.UsageError("--worst-case と --strategy の併用には --n が必要です")
            schedule = system.plan(size, chosen, kmax)

        if worst_case:
            assert schedule is not None
            dag = system.worst_case_dag(schedule)
            click.echo(f"最悪ケース DAG:\n{format_dag(dag)}", err=True, nl=False)
        assert dag is not None

        result = system.simulate(
            dag,
            schedule,
            adaptive=adaptive,
            kmax=kmax,
            collider_rule=collider_rule,
            engine=Engine(engine),
            command=_command_echo(ctx),
            strategy=chosen,
            seed=seed,
        )
        await _emit(system, result, out)
        click.echo(
            f"状態 {result.status.value} / 実験数 {result.experiment_count}", err=True
        )
        if result.status == RunStatus.CONTRADICTION:
            sys.exit(EXIT_CONTRADICTION)

    _run(_simulate)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="変数の数")
@click.option("--max-len", type=int, required=True, help="探索するスケジュール長の上限")
@click.option("--kmax", type=int, help="介入サイズの上限")
@click.option(
    "--mode",
    type=click.Choice([m.value for m in VerifyMode]),
    default=VerifyMode.BOTH.value,
    show_default=True,
)
@click.option("--out", type=click.Path(dir_okay=False), help="結果 JSON の出力先")
@click.pass_context
def verify(
    ctx: click.Context,
    n: int,
    max_len: int,
    kmax: Optional[int],
    mode: str,
    out: Optional[str],
) -> None:
    """理論上の長さを全探索で検証"""

    async def _verify() -> VerificationVerdict:
        system = _system(ctx)
        report = system.verify(n, max_len, kmax, VerifyMode(mode))
        await _emit(system, report, out)
        necessity = report.necessity
        if necessity is not None:
            found = "なし" if necessity.length is None else str(necessity.length)
            click.echo(f"最短長 {found} / 理論値 {report.theoretical_length}", err=True)
        for mismatch in report.mismatches:
            click.echo(f"⚠️ {mismatch}", err=True)
        return report.verdict

    verdict = _run(_verify)
    if verdict == VerificationVerdict.MISMATCH:
        sys.exit(EXIT_MISMATCH)


class _EnumerationSummary(BaseModel):
    n: int
    count: int
    dags: Optional[list[str]] = None


@cli.command(name="enumerate")
@click.option("--n", "n", type=int, required=True, help="変数の数")
@click.option("--list", "list_all", is_flag=True, help=f"全 DAG を出力（n <= {LIST_MAX_N}）")
@click.pass_context
def enumerate_command(ctx: click.Context, n: int, list_all: bool) -> None:
    """n 頂点上のラベル付き DAG を数える"""
    if list_all and n > LIST_MAX_N:
        raise click.UsageError(f"--list は n <= {LIST_MAX_N} でのみ使用できます")

    async def _enumerate() -> None:
        system = _system(ctx)
        dags = system.enumerate(n)
        summary = _EnumerationSummary(
            n=n,
            count=len(dags),
            dags=[format_dag(g) for g in dags] if list_all else None,
        )
        click.echo(format_json(summary), nl=False)

    _run(_enumerate)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="変数の数")
@click.option("--trials", type=int, required=True, help="試行回数")
@click.option("--edge-prob", type=float, required=True, help="辺の確率")
@click.option("--seed", type=int, required=True, help="乱数シード")
@click.option("--strategy", type=click.Choice([s.value for s in Strategy]), help="戦略")
@click.option("--kmax", type=int, help="介入サイズの上限")
@click.option("--adaptive", is_flag=True, help="adaptive_next で逐次的に実験を選ぶ")
@click.option("--out", type=click.Path(dir_okay=False), help="結果 JSON の出力先")
@click.pass_context
def bench(
    ctx: click.Context,
    n: int,
    trials: int,
    edge_prob: float,
    seed: int,
    strategy: Optional[str],
    kmax: Optional[int],
    adaptive: bool,
    out: Optional[str],
) -> None:
    """乱数 DAG で回復率と実験回数を測定"""
    if (strategy is None) == (not adaptive):
        raise click.UsageError("--strategy か --adaptive のどちらか一方を指定してください")
    chosen = Strategy(strategy) if strategy is not None else None
    if chosen is not None and (chosen == Strategy.KMAX) != (kmax is not None):
        raise click.UsageError("--kmax は --strategy kmax と組み合わせてのみ指定します")

    async def _bench() -> bool:
        system = _system(ctx)
        summary = system.bench(n, trials, edge_prob, seed, chosen, kmax, adaptive)
        await _emit(system, summary, out)
        click.echo(
            f"回復 {summary.recovered}/{summary.trials} / "
            f"平均実験数 {summary.mean_experiments:.2f} (最大 {summary.max_experiments})"
            + (f" / 理論値 {summary.theoretical_length}" if summary.theoretical_length else ""),
            err=True,
        )
        return bool(summary.coverage_sufficient) and summary.recovery_rate < 1.0

    if _run(_bench):
        sys.exit(EXIT_MISMATCH)


def main() -> None:
    """メインエントリーポイント"""
    cli()


if __name__ == "__main__":
    main()
