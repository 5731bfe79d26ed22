"""データモデル定義"""

from enum import Enum
from typing import Any, Iterable, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from .errors import ArgumentError

Pair = tuple[int, int]


class PairTestKind(Enum):
    """実験がペアに対して行う検定の種類"""
    DIRECTIONAL_FROM_X = "directional-from-x"
    DIRECTIONAL_FROM_Y = "directional-from-y"
    ADJACENCY = "adjacency"
    ZERO_INFORMATION = "zero-information"


class Verdict(Enum):
    """検定の判定結果"""
    EDGE_X_TO_Y = "edge-x-to-y"
    EDGE_Y_TO_X = "edge-y-to-x"
    NO_EDGE_FROM_X = "no-edge-from-x"
    NO_EDGE_FROM_Y = "no-edge-from-y"
    ADJACENT = "adjacent"
    NOT_ADJACENT = "not-adjacent"
    NONE = "none"


class PairRelation(Enum):
    """ペア (x < y) の真の関係"""
    FORWARD = "edge-x-to-y"
    BACKWARD = "edge-y-to-x"
    NO_EDGE = "no-edge"


class Strategy(Enum):
    """スケジュール生成戦略"""
    SINGLE = "single"
    BINARY = "binary"
    HALVING = "halving"
    KMAX = "kmax"


class Engine(Enum):
    """知識エンジン"""
    PAIRWISE = "pairwise"
    EXACT = "exact"
    BOTH = "both"


class RunStatus(Enum):
    """シミュレーション結果の状態"""
    RECOVERED = "recovered"
    UNRESOLVED = "unresolved"
    CONTRADICTION = "contradiction"


class VerifyMode(Enum):
    """検証モード"""
    SUFFICIENCY = "sufficiency"
    NECESSITY = "necessity"
    BOTH = "both"


class VerificationVerdict(Enum):
    """理論値との照合結果"""
    MATCH = "MATCH"
    MISMATCH = "MISMATCH"


ALLOWED_VERDICTS: dict[PairTestKind, frozenset[Verdict]] = {
    PairTestKind.DIRECTIONAL_FROM_X: frozenset(
        {Verdict.EDGE_X_TO_Y, Verdict.NO_EDGE_FROM_X}
    ),
    PairTestKind.DIRECTIONAL_FROM_Y: frozenset(
        {Verdict.EDGE_Y_TO_X, Verdict.NO_EDGE_FROM_Y}
    ),
    PairTestKind.ADJACENCY: frozenset({Verdict.ADJACENT, Verdict.NOT_ADJACENT}),
    PairTestKind.ZERO_INFORMATION: frozenset({Verdict.NONE}),
}


class InterventionSet(BaseModel):
    """介入集合（空集合は受動観測）"""
    model_config = ConfigDict(frozen=True)

    members: frozenset[int] = Field(
        default_factory=frozenset, description="同時にランダム化する変数"
    )

    @field_validator("members")
    @classmethod
    def _non_negative(cls, members: frozenset[int]) -> frozenset[int]:
        if any(m < 0 for m in members):
            raise ValueError(f"変数番号は0以上である必要があります: {sorted(members)}")
        return members

    @field_serializer("members")
    def _serialize_members(self, members: frozenset[int]) -> list[int]:
        return sorted(members)

    @classmethod
    def of(cls, members: Iterable[int] = ()) -> "InterventionSet":
        return cls(members=frozenset(members))

    @classmethod
    def from_mask(cls, mask: int) -> "InterventionSet":
        return cls.of(v for v in range(mask.bit_length()) if mask >> v & 1)

    @property
    def mask(self) -> int:
        result = 0
        for v in self.members:
            result |= 1 << v
        return result

    @property
    def size(self) -> int:
        return len(self.members)

    def sorted_members(self) -> list[int]:
        return sorted(self.members)

    def __contains__(self, vertex: object) -> bool:
        return vertex in self.members

    def validate_for(self, n: int, kmax: Optional[int] = None) -> None:
        """n 変数のグラフに対して妥当か検査"""
        out_of_range = [m for m in self.members if m >= n]
        if out_of_range:
            raise ArgumentError(
                f"介入対象が範囲外です: {sorted(out_of_range)} (n={n})"
            )
        if kmax is not None and len(self.members) > kmax:
            raise ArgumentError(
                f"介入集合のサイズ {len(self.members)} が kmax={kmax} を超えています"
            )


class Experiment(BaseModel):
    """実験（介入集合の選択）"""
    model_config = ConfigDict(frozen=True)

    intervention: InterventionSet = Field(
        default_factory=InterventionSet, description="介入集合"
    )

    @classmethod
    def on(cls, *members: int) -> "Experiment":
        return cls(intervention=InterventionSet.of(members))

    @classmethod
    def null(cls) -> "Experiment":
        return cls()

    @property
    def is_null(self) -> bool:
        return self.intervention.size == 0


class PairOutcome(BaseModel):
    """1実験における1ペアの検定種別と判定"""
    model_config = ConfigDict(frozen=True)

    x: int = Field(..., ge=0, description="ペアの小さい方の変数")
    y: int = Field(..., ge=0, description="ペアの大きい方の変数")
    kind: PairTestKind = Field(..., description="検定の種類")
    verdict: Verdict = Field(..., description="判定")

    @model_validator(mode="after")
    def _check_consistency(self) -> "PairOutcome":
        if self.x >= self.y:
            raise ValueError(f"ペアは x < y の順である必要があります: ({self.x},{self.y})")
        if self.verdict not in ALLOWED_VERDICTS[self.kind]:
            raise ValueError(
                f"検定種別 {self.kind.value} と判定 {self.verdict.value} が矛盾しています"
            )
        return self

    @property
    def pair(self) -> Pair:
        return (self.x, self.y)


class Schedule(BaseModel):
    """実験スケジュール（介入集合の順序付きリスト）"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="変数の数")
    experiments: tuple[Experiment, ...] = Field(
        default_factory=tuple, description="実験の列"
    )

    @field_validator("experiments", mode="before")
    @classmethod
    def _coerce_experiments(cls, value: Any) -> Any:
        if not isinstance(value, (list, tuple)):
            return value
        coerced: list[Any] = []
        for item in value:
            if isinstance(item, Experiment) or isinstance(item, dict):
                coerced.append(item)
            elif isinstance(item, InterventionSet):
                coerced.append(Experiment(intervention=item))
            elif isinstance(item, (list, tuple, set, frozenset)):
                coerced.append(Experiment(intervention=InterventionSet.of(item)))
            else:
                coerced.append(item)
        return tuple(coerced)

    @model_validator(mode="after")
    def _check_ranges(self) -> "Schedule":
        for experiment in self.experiments:
            experiment.intervention.validate_for(self.n)
        return self

    @field_serializer("experiments")
    def _serialize_experiments(
        self, experiments: tuple[Experiment, ...]
    ) -> list[list[int]]:
        return [e.intervention.sorted_members() for e in experiments]

    @classmethod
    def of(cls, n: int, sets: Iterable[Iterable[int]]) -> "Schedule":
        return cls(n=n, experiments=tuple(Experiment.on(*s) for s in sets))

    @property
    def length(self) -> int:
        return len(self.experiments)

    def masks(self) -> list[int]:
        return [e.intervention.mask for e in self.experiments]

    def member_lists(self) -> list[list[int]]:
        return [e.intervention.sorted_members() for e in self.experiments]

    def appended(self, experiment: Experiment) -> "Schedule":
        """実験を末尾に追加した新しいスケジュールを返す"""
        return Schedule(n=self.n, experiments=(*self.experiments, experiment))


class PairCoverage(BaseModel):
    """ペアごとの検定履歴"""
    x: int
    y: int
    kinds: list[PairTestKind] = Field(default_factory=list, description="実験順の検定種別")
    sufficient: bool = Field(..., description="2検定基準を満たすか")


class CoverageReport(BaseModel):
    """スケジュールのカバレッジ分析"""
    n: int
    experiment_count: int
    pairs: list[PairCoverage]
    overall_sufficient: bool

    def insufficient_pairs(self) -> list[Pair]:
        return [(c.x, c.y) for c in self.pairs if not c.sufficient]


class PairStateRecord(BaseModel):
    """ペア状態のスナップショット"""
    x: int
    y: int
    possibilities: list[PairRelation]


class KnowledgeSnapshot(BaseModel):
    """ペア格子のスナップショット"""
    n: int
    history: list[list[int]] = Field(default_factory=list, description="実施済み介入集合")
    pairs: list[PairStateRecord] = Field(default_factory=list)
    resolved: bool


class ExperimentStep(BaseModel):
    """1実験分の実行記録"""
    index: int = Field(..., ge=0)
    intervention: list[int]
    outcomes: Optional[list[PairOutcome]] = None
    unresolved_pairs: Optional[int] = None
    consistent_set_size: Optional[int] = None


class RunResult(BaseModel):
    """シミュレーション結果"""
    command: str = Field(..., description="実行コマンド")
    n: int
    kmax: Optional[int] = None
    strategy: Optional[str] = None
    seed: Optional[int] = None
    engine: Engine
    adaptive: bool = False
    collider_rule: bool = False
    true_edges: list[tuple[int, int]] = Field(default_factory=list)
    schedule: Schedule
    steps: list[ExperimentStep] = Field(default_factory=list)
    status: RunStatus
    recovered_edges: Optional[list[tuple[int, int]]] = None
    experiment_count: int
    knowledge: Optional[KnowledgeSnapshot] = None
    consistent_set_size: Optional[int] = None
    message: Optional[str] = None
    wall_time: float = 0.0

    @model_validator(mode="after")
    def _check_invariants(self) -> "RunResult":
        if self.experiment_count != self.schedule.length:
            raise ValueError("experiment_count が実行スケジュール長と一致しません")
        if (self.recovered_edges is not None) != (self.status == RunStatus.RECOVERED):
            raise ValueError("recovered_edges は status=recovered のときのみ設定されます")
        return self


class Witness(BaseModel):
    """区別できないDAGの組"""
    first_index: int
    second_index: int
    first: str = Field(..., description="DAGテキスト形式")
    second: str = Field(..., description="DAGテキスト形式")


class IdentificationResult(BaseModel):
    """identifies_all の結果"""
    identifies: bool
    witness: Optional[Witness] = None


class Refutation(BaseModel):
    """識別に失敗したスケジュールとその反例"""
    schedule: Schedule
    witness: Witness


class MinLengthResult(BaseModel):
    """最小識別スケジュール長の探索結果"""
    n: int
    max_len: int
    kmax: Optional[int] = None
    length: Optional[int] = None
    example: Optional[Schedule] = None
    refuted_length: Optional[int] = Field(
        default=None, description="反例を列挙した長さ (min-1 または max_len)"
    )
    refutations: list[Refutation] = Field(default_factory=list)
    schedules_checked: int = 0


class SufficiencyCheck(BaseModel):
    """計画スケジュールの十分性検証"""
    strategy: Strategy
    schedule: Schedule
    length: int
    identifies_all: bool
    witness: Optional[Witness] = None


class VerificationReport(BaseModel):
    """検証レポート"""
    n: int
    max_len: int
    kmax: Optional[int] = None
    mode: VerifyMode
    theoretical_length: int
    bound_exact: bool = Field(..., description="理論値が厳密値か (False なら上界)")
    sufficiency: Optional[SufficiencyCheck] = None
    necessity: Optional[MinLengthResult] = None
    directional_cover_length: Optional[int] = None
    adaptive_length: Optional[int] = None
    verdict: VerificationVerdict
    mismatches: list[str] = Field(default_factory=list)
    wall_time: float = 0.0


class BenchSummary(BaseModel):
    """ベンチマーク集計"""
    n: int
    trials: int
    edge_prob: float
    seed: int
    strategy: Optional[str] = None
    kmax: Optional[int] = None
    adaptive: bool = False
    engine: Engine
    theoretical_length: Optional[int] = None
    coverage_sufficient: Optional[bool] = None
    recovered: int
    recovery_rate: float
    mean_experiments: float
    max_experiments: int
    wall_time: float = 0.0
