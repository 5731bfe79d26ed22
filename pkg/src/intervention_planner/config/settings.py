"""設定管理システム"""

from pathlib import Path
from typing import Any, Optional

import structlog
import yaml
from pydantic import BaseModel, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = structlog.get_logger(__name__)

DEFAULT_CONFIG_PATH = Path("config/default.yaml")


class EnumerationConfig(BaseModel):
    """DAG 列挙設定"""
    max_n: int = Field(default=5, ge=1, le=7, description="全列挙を許す最大の変数数")


class OracleConfig(BaseModel):
    """オラクル設定"""
    max_response_n: int = Field(default=16, ge=1, description="完全応答を返す最大の変数数")


class KnowledgeConfig(BaseModel):
    """知識エンジン設定"""
    collider_rule: bool = Field(default=False, description="合流点規則を既定で有効にするか")


class PlannerConfig(BaseModel):
    """計画設定"""
    adaptive_exhaustive_max_n: int = Field(
        default=16, ge=1, le=20, description="適応選択で全候補を評価する最大の変数数"
    )


class VerifierConfig(BaseModel):
    """検証設定"""
    canonicalize: bool = Field(default=True, description="変数の付け替えで探索を枝刈りする")
    adaptive_search: bool = Field(default=False, description="適応戦略のゲーム木探索も行う")
    adaptive_search_max_n: int = Field(default=3, ge=1, le=4)


class StorageConfig(BaseModel):
    """ストレージ設定"""
    type: str = Field(default="local", pattern="^local$")
    path: str = "./data/results"


class Settings(BaseSettings):
    """アプリケーション設定"""

    model_config = SettingsConfigDict(
        env_prefix="INTERVENTION_PLANNER_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    enumeration: EnumerationConfig = Field(default_factory=EnumerationConfig)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    knowledge: KnowledgeConfig = Field(default_factory=KnowledgeConfig)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    verifier: VerifierConfig = Field(default_factory=VerifierConfig)
    storage: StorageConfig = Field(default_factory=StorageConfig)

    # ログ設定
    log_level: str = Field(default="WARNING", pattern="^(DEBUG|INFO|WARNING|ERROR)$")

    @classmethod
    def from_yaml(cls, config_path: str | Path) -> "Settings":
        """YAMLファイルから設定を読み込み（環境変数が YAML より優先）"""
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"設定ファイルが見つかりません: {config_path}")

        with open(config_path, "r", encoding="utf-8") as f:
            yaml_data = yaml.safe_load(f) or {}
        if not isinstance(yaml_data, dict):
            raise ValueError(f"設定ファイルの最上位はマッピングである必要があります: {config_path}")

        from_env = cls().model_dump(exclude_unset=True)
        return cls(**_deep_merge(yaml_data, from_env))


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_default_config(config_path: Optional[str | Path] = None) -> Settings:
    """デフォルト設定ファイルを含む設定を読み込み"""
    path = Path(config_path) if config_path is not None else DEFAULT_CONFIG_PATH
    if not path.exists():
        if config_path is not None:
            raise FileNotFoundError(f"設定ファイルが見つかりません: {path}")
        return Settings()
    try:
        return Settings.from_yaml(path)
    except (ValidationError, ValueError, yaml.YAMLError) as e:
        if config_path is not None:
            raise
        logger.warning("設定ファイル読み込みエラー、既定値を使用します", path=str(path), error=str(e))
        return Settings()
