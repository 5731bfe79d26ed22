"""共通フィクスチャ"""

import pytest

from intervention_planner.config.logging import configure_logging
from intervention_planner.config.settings import Settings
from intervention_planner.core.system import InterventionPlannerSystem
from intervention_planner.graph.dag import Dag, make_dag


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="n=5 の全列挙テストも実行")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="--runslow を指定すると実行")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True, scope="session")
def _quiet_logging() -> None:
    configure_logging("WARNING")


@pytest.fixture
def worked_example() -> Dag:
    """V2→V1, V1→V3, V2→V3（0始まりの番号で 1→0, 0→2, 1→2）"""
    return make_dag(3, [(1, 0), (0, 2), (1, 2)])


@pytest.fixture
def settings(tmp_path, monkeypatch: pytest.MonkeyPatch) -> Settings:
    monkeypatch.chdir(tmp_path)
    return Settings(storage={"path": str(tmp_path / "results")})


@pytest.fixture
def system(settings: Settings) -> InterventionPlannerSystem:
    return InterventionPlannerSystem(settings)
