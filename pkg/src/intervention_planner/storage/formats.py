"""DAG テキスト形式とスケジュール JSON のコーデック

DAG テキスト形式::

    3          # 1行目: 変数の数 N
    0 2        # 以降: "親 子" の辺（ソート順）
    1 0

'#' 以降はコメントとして読み飛ばす。
"""

import json
from typing import Iterator

from pydantic import BaseModel, ValidationError

from ..graph.dag import Dag, make_dag
from ..models.data import Pair, Schedule
from ..models.errors import CycleError, FormatError


def format_dag(g: Dag) -> str:
    lines = [str(g.n)]
    lines.extend(f"{p} {c}" for p, c in g.sorted_edges)
    return "\n".join(lines) + "\n"


def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def parse_dag(text: str, source: str = "") -> Dag:
    """DAG テキストを読み込む（エラーには行番号を付ける）"""
    lines = _content_lines(text)
    header = next(lines, None)
    if header is None:
        raise FormatError("変数の数 N の行がありません", source=source)
    number, line = header
    try:
        n = int(line)
    except ValueError:
        raise FormatError(f"N が整数ではありません: {line!r}", number, source) from None
    if n < 1:
        raise FormatError(f"N は1以上である必要があります: {n}", number, source)

    edges: list[Pair] = []
    seen: set[Pair] = set()
    for number, line in lines:
        fields = line.split()
        if len(fields) != 2:
            raise FormatError(f"'親 子' の2整数が必要です: {line!r}", number, source)
        try:
            parent, child = int(fields[0]), int(fields[1])
        except ValueError:
            raise FormatError(f"辺の端点が整数ではありません: {line!r}", number, source) from None
        if not (0 <= parent < n and 0 <= child < n):
            raise FormatError(f"端点が範囲外です: ({parent},{child}) n={n}", number, source)
        if parent == child:
            raise FormatError(f"自己ループです: {parent}", number, source)
        if (parent, child) in seen:
            raise FormatError(f"重複した辺です: ({parent},{child})", number, source)
        seen.add((parent, child))
        edges.append((parent, child))

    try:
        return make_dag(n, edges)
    except CycleError as e:
        raise FormatError(str(e), source=source) from None


def format_schedule(schedule: Schedule) -> str:
    return json.dumps(schedule.model_dump(mode="json")) + "\n"


def parse_schedule(text: str, source: str = "") -> Schedule:
    """スケジュール JSON を読み込む"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"JSON として解析できません: {e.msg}", e.lineno, source) from None
    if not isinstance(data, dict) or "n" not in data or "experiments" not in data:
        raise FormatError("'n' と 'experiments' を持つオブジェクトが必要です", source=source)
    try:
        return Schedule.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise FormatError(f"スケジュールが不正です ({location}): {first['msg']}", source=source) from None


def format_json(model: BaseModel) -> str:
    """結果モデルを JSON テキストにする"""
    return json.dumps(model.model_dump(mode="json"), ensure_ascii=False, indent=2) + "\n"
