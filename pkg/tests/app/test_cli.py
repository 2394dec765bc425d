"""命令列入口測試。

涵蓋：
- Rule: 結束碼 0 = 通過、1 = 執行錯誤
- Rule: 元件子命令輸出 JSON 並寫出 CSV
- Rule: certify 可讀回先前輸出的 CSV
"""

from __future__ import annotations

import json
from pathlib import Path

import allure
import pytest

from apps.concavity_cli.main import EXIT_ERROR, EXIT_OK, main

TORSION_TOML = """
config_version = 1
name = "torsion-cli"
alphas = [1.0]

[geometry]
N = 2
R = 1.0

[problem]
kind = "elliptic"
lambda = 1.0
gamma = 0.0

[solver]
grid_size = 256

[certification]
n_pairs = 4
n_params = 3
"""


@pytest.fixture
def torsion_config(tmp_path: Path) -> Path:
    path = tmp_path / 'torsion.toml'
    path.write_text(TORSION_TOML, encoding='utf-8')
    return path


@allure.feature('命令列')
@allure.story('結束碼 0 = 通過、1 = 執行錯誤')
class TestExitCodes:
    """測試 main 的結束碼。"""

    @allure.title('run 成功並寫出報告')
    def test_run(self, torsion_config: Path, tmp_path: Path) -> None:
        """Scenario: run --config --out 回傳 0，輸出目錄含 summary.json。"""
        out = tmp_path / 'out'
        code = main(['run', '--config', str(torsion_config), '--out', str(out)])
        assert code == EXIT_OK
        summary = json.loads((out / 'torsion-cli' / 'summary.json').read_text(encoding='utf-8'))
        assert summary['tags']['T1.1'] == 'certified_strict'
        assert (out / 'torsion-cli' / 'profile_solution.csv').is_file()

    @allure.title('設定檔不存在')
    def test_missing_config(self, tmp_path: Path) -> None:
        """Scenario: --config 指向不存在的檔案回傳 1。"""
        assert main(['run', '--config', str(tmp_path / 'nope.toml')]) == EXIT_ERROR

    @allure.title('缺少 --config')
    def test_no_config(self) -> None:
        """Scenario: run 沒有 --config 回傳 1。"""
        assert main(['run']) == EXIT_ERROR

    @allure.title('不支援的輸出格式')
    def test_bad_format(self, torsion_config: Path, tmp_path: Path) -> None:
        """Scenario: --format pdf 回傳 1。"""
        args = ['run', '--config', str(torsion_config), '--out', str(tmp_path), '--format', 'pdf']
        assert main(args) == EXIT_ERROR

    @allure.title('子命令與問題種類不符')
    def test_wrong_problem(self, torsion_config: Path, tmp_path: Path) -> None:
        """Scenario: elliptic 情境使用 solve-parabolic 回傳 1。"""
        args = ['solve-parabolic', '--config', str(torsion_config), '--out', str(tmp_path)]
        assert main(args) == EXIT_ERROR


@allure.feature('命令列')
@allure.story('元件子命令輸出 JSON 並寫出 CSV')
class TestComponentCommands:
    """測試元件子命令。"""

    @allure.title('conditions 印出條件報告')
    def test_conditions(self, torsion_config: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Scenario: C2-necessary、Eq13、Eq11 三份報告皆成立。"""
        assert main(['conditions', '--config', str(torsion_config)]) == EXIT_OK
        reports = json.loads(capsys.readouterr().out)
        assert [r['condition'] for r in reports] == ['C2-necessary', 'Eq13', 'Eq11']
        assert all(r['holds'] for r in reports)

    @allure.title('solve-elliptic 寫出解的 CSV')
    def test_solve_elliptic(self, torsion_config: Path, tmp_path: Path) -> None:
        """Scenario: profile_solution.csv 存在。"""
        args = ['solve-elliptic', '--config', str(torsion_config), '--out', str(tmp_path)]
        assert main(args) == EXIT_OK
        assert (tmp_path / 'torsion-cli' / 'profile_solution.csv').is_file()


@allure.feature('命令列')
@allure.story('certify 可讀回先前輸出的 CSV')
class TestCertifyCommand:
    """測試 certify 子命令。"""

    @allure.title('由 CSV 認證扭轉解')
    def test_certify_csv(
        self, torsion_config: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Scenario: solve-elliptic 的 CSV 於 α ∈ {1, 0.5} 通過。"""
        solve = ['solve-elliptic', '--config', str(torsion_config), '--out', str(tmp_path)]
        assert main(solve) == EXIT_OK
        capsys.readouterr()
        csv = tmp_path / 'torsion-cli' / 'profile_solution.csv'
        args = [
            'certify', '--config', str(torsion_config), '--profile', str(csv),
            '--alpha', '1.0', '--alpha', '0.5',
        ]
        assert main(args) == EXIT_OK
        results = json.loads(capsys.readouterr().out)
        assert set(results) == {'alpha=1', 'alpha=0.5'}
        assert all(r['verdict'] == 'certified_strict' for r in results.values())
