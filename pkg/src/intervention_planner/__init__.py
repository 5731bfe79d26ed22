"""介入実験プランナー - 因果 DAG を特定する多変数介入実験の計画・シミュレーション・検証"""

__version__ = "0.1.0"

from .config.settings import Settings
from .core.system import InterventionPlannerSystem

__all__ = ["InterventionPlannerSystem", "Settings"]
