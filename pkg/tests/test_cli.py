"""コマンドラインインターフェースのテスト"""

import json

import pytest
from click.testing import CliRunner

from intervention_planner.cli import bound_label, cli
from intervention_planner.core.system import InterventionPlannerSystem
from intervention_planner.models.data import (
    Strategy,
    VerificationReport,
    VerificationVerdict,
    VerifyMode,
)
from intervention_planner.models.errors import ContradictionError


@pytest.fixture
def runner(tmp_path, monkeypatch) -> CliRunner:
    monkeypatch.chdir(tmp_path)
    return CliRunner()


@pytest.fixture
def dag_file(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("3\n0 2\n1 0\n1 2\n", encoding="utf-8")
    return path


class TestPlan:
    """plan コマンドのテスト"""

    def test_binary(self, runner, tmp_path):
        """n=8 の符号語スケジュールを保存し理論値を表示"""
        out = tmp_path / "s.json"
        result = runner.invoke(cli, ["plan", "--n", "8", "--strategy", "binary", "--out", str(out)])

        assert result.exit_code == 0
        summary = json.loads(result.stdout)
        assert summary["length"] == 4
        assert summary["bound_label"] == "⌈log₂8⌉+1 = 4"
        assert json.loads(out.read_text(encoding="utf-8"))["experiments"][0] == [1, 3, 5, 7]

    def test_kmax(self, runner):
        """kmax 戦略は上限付きで5回"""
        result = runner.invoke(cli, ["plan", "--n", "8", "--strategy", "kmax", "--kmax", "2"])

        assert result.exit_code == 0
        summary = json.loads(result.stdout)
        assert summary["length"] == 5
        assert summary["bound"] == 5

    def test_default_path(self, runner, tmp_path):
        """出力先を省略すると storage.path 配下"""
        result = runner.invoke(cli, ["plan", "--n", "3", "--strategy", "single"])

        assert result.exit_code == 0
        assert (tmp_path / "data" / "results" / "schedule_single_n3.json").exists()

    def test_missing_kmax(self, runner):
        """kmax 戦略で --kmax がなければ使用法エラー"""
        result = runner.invoke(cli, ["plan", "--n", "8", "--strategy", "kmax"])
        assert result.exit_code == 1

    def test_kmax_too_large(self, runner):
        """kmax >= n/2 はプランナーのエラーをそのまま表示"""
        result = runner.invoke(cli, ["plan", "--n", "8", "--strategy", "kmax", "--kmax", "4"])

        assert result.exit_code == 1
        assert "binary_codeword_schedule" in result.stderr

    def test_unknown_option(self, runner):
        """未知のオプションは終了コード 1"""
        result = runner.invoke(cli, ["plan", "--n", "8", "--bogus"])
        assert result.exit_code == 1

    def test_bound_labels(self):
        """理論値の表示"""
        assert bound_label(10, Strategy.BINARY) == "⌈log₂10⌉ = 4"
        assert bound_label(3, Strategy.SINGLE) == "n−1 = 2"
        assert bound_label(16, Strategy.KMAX, 4).endswith("= 7")


class TestSimulate:
    """simulate コマンドのテスト"""

    def test_dag_and_schedule_files(self, runner, tmp_path, dag_file):
        """ファイルから読み込んで両エンジンで回復"""
        schedule = tmp_path / "s.json"
        schedule.write_text('{"n": 3, "experiments": [[0], [1]]}\n', encoding="utf-8")
        result = runner.invoke(
            cli,
            ["simulate", "--dag", str(dag_file), "--schedule", str(schedule), "--engine", "both"],
        )

        assert result.exit_code == 0
        run = json.loads(result.stdout)
        assert run["status"] == "recovered"
        assert [s["consistent_set_size"] for s in run["steps"]] == [2, 1]
        assert run["recovered_edges"] == [[0, 2], [1, 0], [1, 2]]

    def test_random(self, runner):
        """乱数 DAG を符号語スケジュールで回復"""
        result = runner.invoke(
            cli, ["simulate", "--random", "10", "0.5", "7", "--strategy", "binary"]
        )

        assert result.exit_code == 0
        run = json.loads(result.stdout)
        assert run["status"] == "recovered"
        assert run["experiment_count"] == 4
        assert run["seed"] == 7

    def test_deterministic_output(self, runner):
        """同じコマンドは wall_time 以外同一の出力"""
        args = ["simulate", "--random", "6", "0.4", "3", "--strategy", "halving"]
        first = json.loads(runner.invoke(cli, args).stdout)
        second = json.loads(runner.invoke(cli, args).stdout)
        first.pop("wall_time")
        second.pop("wall_time")
        assert first == second

    def test_worst_case(self, runner):
        """最悪ケース DAG での実行"""
        result = runner.invoke(
            cli, ["simulate", "--worst-case", "--n", "4", "--strategy", "binary", "--engine", "both"]
        )

        assert result.exit_code == 0
        assert json.loads(result.stdout)["status"] == "recovered"

    def test_adaptive_to_file(self, runner, tmp_path, dag_file):
        """適応モードの結果をファイルに保存"""
        out = tmp_path / "run.json"
        result = runner.invoke(
            cli, ["simulate", "--dag", str(dag_file), "--adaptive", "--out", str(out)]
        )

        assert result.exit_code == 0
        assert json.loads(out.read_text(encoding="utf-8"))["adaptive"] is True

    def test_bad_dag_file(self, runner, tmp_path):
        """形式エラーは行番号付きで終了コード 1"""
        bad = tmp_path / "bad.txt"
        bad.write_text("3\n0 1\n1 x\n", encoding="utf-8")
        result = runner.invoke(cli, ["simulate", "--dag", str(bad), "--strategy", "binary"])

        assert result.exit_code == 1
        assert "3行目" in result.stderr

    def test_missing_source(self, runner):
        """DAG の指定がなければ使用法エラー"""
        result = runner.invoke(cli, ["simulate", "--strategy", "binary"])
        assert result.exit_code == 1

    def test_exact_cap(self, runner):
        """厳密エンジンの上限超過は終了コード 1"""
        result = runner.invoke(
            cli, ["simulate", "--random", "7", "0.5", "1", "--strategy", "binary", "--engine", "exact"]
        )
        assert result.exit_code == 1

    def test_contradiction_exit_code(self, runner, dag_file, monkeypatch):
        """エンジンの矛盾は終了コード 3"""

        def _raise(*_args, **_kwargs):
            raise ContradictionError("矛盾", (0, 1), 0)

        monkeypatch.setattr(InterventionPlannerSystem, "simulate", _raise)
        result = runner.invoke(cli, ["simulate", "--dag", str(dag_file), "--strategy", "binary"])
        assert result.exit_code == 3


class TestVerify:
    """verify コマンドのテスト"""

    def test_match(self, runner):
        """n=3 の必要性検証"""
        result = runner.invoke(cli, ["verify", "--n", "3", "--max-len", "2", "--mode", "necessity"])

        assert result.exit_code == 0
        report = json.loads(result.stdout)
        assert report["necessity"]["length"] == 2
        assert report["verdict"] == "MATCH"

    def test_none_within_bound(self, runner):
        """n=2 で長さ 1 までに見つからないことを報告"""
        result = runner.invoke(cli, ["verify", "--n", "2", "--max-len", "1", "--mode", "necessity"])

        assert result.exit_code == 0
        report = json.loads(result.stdout)
        assert report["necessity"]["length"] is None
        assert report["necessity"]["refuted_length"] == 1

    def test_cap(self, runner):
        """上限超過は上限値を示して拒否"""
        result = runner.invoke(cli, ["verify", "--n", "6", "--max-len", "3"])

        assert result.exit_code == 1
        assert "5" in result.stderr

    def test_mismatch_exit_code(self, runner, monkeypatch):
        """不一致は終了コード 2"""

        def _mismatch(self, n, max_len, kmax=None, mode=VerifyMode.BOTH):
            return VerificationReport(
                n=n,
                max_len=max_len,
                mode=mode,
                theoretical_length=3,
                bound_exact=True,
                verdict=VerificationVerdict.MISMATCH,
                mismatches=["テスト用の不一致"],
            )

        monkeypatch.setattr(InterventionPlannerSystem, "verify", _mismatch)
        result = runner.invoke(cli, ["verify", "--n", "4", "--max-len", "3"])
        assert result.exit_code == 2


class TestEnumerate:
    """enumerate コマンドのテスト"""

    def test_count(self, runner):
        """n=3 は 25 個"""
        result = runner.invoke(cli, ["enumerate", "--n", "3"])

        assert result.exit_code == 0
        assert json.loads(result.stdout) == {"n": 3, "count": 25, "dags": None}

    def test_list(self, runner):
        """n=2 の全 DAG を出力"""
        result = runner.invoke(cli, ["enumerate", "--n", "2", "--list"])

        assert result.exit_code == 0
        assert json.loads(result.stdout)["dags"] == ["2\n", "2\n0 1\n", "2\n1 0\n"]

    def test_list_limit(self, runner):
        """--list は n <= 4 のみ"""
        result = runner.invoke(cli, ["enumerate", "--n", "5", "--list"])
        assert result.exit_code == 1

    def test_cap(self, runner):
        """列挙上限の超過"""
        result = runner.invoke(cli, ["enumerate", "--n", "6"])
        assert result.exit_code == 1


class TestBench:
    """bench コマンドのテスト"""

    def test_single(self, runner):
        """n=3 の完全グラフ 25 個"""
        result = runner.invoke(
            cli,
            ["bench", "--n", "3", "--trials", "25", "--edge-prob", "1.0", "--seed", "0", "--strategy", "single"],
        )

        assert result.exit_code == 0
        summary = json.loads(result.stdout)
        assert summary["recovered"] == 25
        assert summary["max_experiments"] == 2

    def test_requires_seed(self, runner):
        """シードは必須"""
        result = runner.invoke(
            cli, ["bench", "--n", "3", "--trials", "5", "--edge-prob", "0.5", "--strategy", "single"]
        )
        assert result.exit_code == 1
