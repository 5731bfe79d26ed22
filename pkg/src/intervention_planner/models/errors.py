"""例外定義"""

from typing import Optional, Sequence


Pair = tuple[int, int]


class InterventionPlannerError(Exception):
    """全例外の基底クラス"""


class DagConstructionError(InterventionPlannerError, ValueError):
    """DAG構築エラー"""


class CycleError(DagConstructionError):
    """閉路を検出"""

    def __init__(self, cycle: Sequence[Pair]):
        self.cycle = list(cycle)
        path = " -> ".join(str(p) for p, _ in self.cycle)
        super().__init__(f"閉路が検出されました: {path} -> {self.cycle[0][0]}")


class DuplicateEdgeError(DagConstructionError):
    """重複辺"""

    def __init__(self, edge: Pair):
        self.edge = edge
        super().__init__(f"辺が重複しています: {edge[0]} -> {edge[1]}")


class SelfLoopError(DagConstructionError):
    """自己ループ"""

    def __init__(self, vertex: int):
        self.vertex = vertex
        super().__init__(f"自己ループは許可されていません: {vertex} -> {vertex}")


class EndpointOutOfRangeError(DagConstructionError):
    """端点が範囲外"""

    def __init__(self, edge: Pair, n: int):
        self.edge = edge
        self.n = n
        super().__init__(
            f"辺の端点が範囲外です: {edge[0]} -> {edge[1]} (n={n})"
        )


class ArgumentError(InterventionPlannerError, ValueError):
    """引数の前提条件違反"""


class EnumerationCapError(InterventionPlannerError):
    """列挙上限を超えた要求の拒否"""

    def __init__(self, n: int, cap: int):
        self.n = n
        self.cap = cap
        super().__init__(
            f"n={n} は列挙上限 {cap} を超えています (上限は設定 enumeration.max_n で変更可能)"
        )


class ResponseSizeError(InterventionPlannerError):
    """オラクル応答サイズ上限を超えた要求の拒否"""

    def __init__(self, n: int, cap: int):
        self.n = n
        self.cap = cap
        super().__init__(
            f"n={n} はオラクル応答の上限 {cap} を超えています。pair_outcomes を使用してください"
        )


class ContradictionError(InterventionPlannerError):
    """観測結果の矛盾"""

    def __init__(
        self,
        message: str,
        pair: Optional[Pair] = None,
        experiment_index: Optional[int] = None,
    ):
        self.message = message
        self.pair = pair
        self.experiment_index = experiment_index
        context: list[str] = []
        if pair is not None:
            context.append(f"pair={pair}")
        if experiment_index is not None:
            context.append(f"experiment={experiment_index}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")

    def with_experiment(self, experiment_index: int) -> "ContradictionError":
        """実験番号を付与した例外を返す"""
        return ContradictionError(self.message, self.pair, experiment_index)


class NotResolvedError(InterventionPlannerError):
    """未確定のペアが残っている"""

    def __init__(self, unresolved: Sequence[Pair]):
        self.unresolved = list(unresolved)
        listed = ", ".join(f"({x},{y})" for x, y in self.unresolved)
        super().__init__(f"未確定のペアがあります: {listed}")


class FormatError(InterventionPlannerError, ValueError):
    """ファイル形式エラー"""

    def __init__(self, message: str, line: Optional[int] = None, source: str = ""):
        self.line = line
        self.source = source
        where = f"{source}:" if source else ""
        where += f"{line}行目: " if line is not None else ""
        super().__init__(f"{where}{message}")
