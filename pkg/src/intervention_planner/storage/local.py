"""ローカルファイルストレージ実装"""

from pathlib import Path
from typing import Optional

import aiofiles
import structlog
from pydantic import BaseModel

from ..graph.dag import Dag
from ..models.data import Schedule, Strategy
from .formats import format_json, format_schedule, parse_dag, parse_schedule

logger = structlog.get_logger(__name__)


class LocalStorage:
    """DAG・スケジュール・結果 JSON の読み書き"""

    def __init__(self, storage_path: str = "./data/results"):
        self.storage_path = Path(storage_path)

    def default_schedule_path(self, strategy: Strategy, n: int) -> Path:
        return self.storage_path / f"schedule_{strategy.value}_n{n}.json"

    async def read_text(self, path: str | Path) -> str:
        async with aiofiles.open(Path(path), "r", encoding="utf-8") as f:
            return await f.read()

    async def write_text(self, path: str | Path, content: str) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(target, "w", encoding="utf-8") as f:
            await f.write(content)
        logger.debug("ファイルを書き込み", path=str(target), size=len(content))
        return target

    async def load_dag(self, path: str | Path) -> Dag:
        """DAG テキストファイルを読み込み"""
        return parse_dag(await self.read_text(path), source=str(path))

    async def load_schedule(self, path: str | Path) -> Schedule:
        """スケジュール JSON を読み込み"""
        return parse_schedule(await self.read_text(path), source=str(path))

    async def save_schedule(
        self,
        schedule: Schedule,
        path: Optional[str | Path] = None,
        strategy: Strategy = Strategy.BINARY,
    ) -> Path:
        """スケジュールを保存（パス省略時は storage_path 配下）"""
        target = path if path is not None else self.default_schedule_path(strategy, schedule.n)
        return await self.write_text(target, format_schedule(schedule))

    async def save_result(self, result: BaseModel, path: str | Path) -> Path:
        """結果モデルを JSON で保存"""
        return await self.write_text(path, format_json(result))
