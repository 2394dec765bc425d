"""情境、pipeline 與報告輸出測試模組。

涵蓋：
- Rule: 情境設定拒絕未知鍵與不一致的組合
- Rule: 相同設定產生相同雜湊
- Rule: pipeline 依問題種類填入定理標籤
- Rule: CSV 逐位元可重現，JSON 以排序鍵輸出
- Rule: 階段失敗以 StageError 回報
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import allure
import numpy as np
import pytest

from warp_concavity.exceptions import ContractViolationError, StageError
from warp_concavity.geometry.ball import Ball
from warp_concavity.report.emit import emit, profile_table, read_profile_csv
from warp_concavity.report.pipeline import build_nonlinearity, initial_profile, run_scenario
from warp_concavity.report.scenario import (
    ParabolicProblem,
    ScenarioConfig,
    load_scenario,
    parse_scenario,
)
from warp_concavity.report.suite import SUITE_SUMMARY, _run_all, builtin_scenarios, run_suite

TORSION_TOML = """
config_version = 1
name = "torsion-r3"
alphas = [1.0]

[geometry]
N = 3
R = 1.0
factor = { kind = "space_form", K = 0.0 }

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


def _torsion_data(**overrides: Any) -> dict[str, Any]:
    data: dict[str, Any] = {
        'config_version': 1,
        'name': 'torsion',
        'geometry': {'N': 3, 'R': 1.0, 'factor': {'kind': 'space_form', 'K': 0.0}},
        'problem': {'kind': 'elliptic', 'lambda': 1.0, 'gamma': 0.0},
        'alphas': [1.0],
        'solver': {'grid_size': 256},
        'certification': {'n_pairs': 4, 'n_params': 3},
    }
    data.update(overrides)
    return data


@allure.feature('情境報告')
@allure.story('情境設定拒絕未知鍵與不一致的組合')
class TestScenarioValidation:
    """測試 parse_scenario 與 load_scenario。"""

    @allure.title('合法設定')
    def test_valid(self) -> None:
        """Scenario: elliptic 問題的 lambda 別名。"""
        config = parse_scenario(_torsion_data())
        assert config.problem.kind == 'elliptic'
        assert config.numeric_alphas == [1.0]

    @allure.title('未知鍵被拒絕')
    def test_extra_key(self) -> None:
        """Scenario: [geometry] 多了 radius。"""
        data = _torsion_data()
        data['geometry']['radius'] = 2.0
        with pytest.raises(ContractViolationError):
            parse_scenario(data)

    @allure.title("alpha = 'auto' 只適用於 eigen")
    def test_auto_requires_eigen(self) -> None:
        """Scenario: elliptic 搭配 'auto' 失敗，eigen 則可。"""
        with pytest.raises(ContractViolationError):
            parse_scenario(_torsion_data(alphas=['auto']))
        config = parse_scenario(_torsion_data(alphas=['auto', 0.0], problem={'kind': 'eigen'}))
        assert config.numeric_alphas == [0.0]

    @allure.title('eigen 問題不接受 gamma')
    def test_eigen_rejects_gamma(self) -> None:
        """Scenario: {'kind': 'eigen', 'gamma': 1.0} 失敗。"""
        with pytest.raises(ContractViolationError):
            parse_scenario(_torsion_data(problem={'kind': 'eigen', 'gamma': 1.0}))

    @allure.title('heat_kernel 需要 K ≤ 0 的空間形式')
    def test_heat_kernel_geometry(self) -> None:
        """Scenario: K = 1 的 heat_kernel 失敗。"""
        data = _torsion_data(
            geometry={'N': 3, 'R': 1.0, 'factor': {'kind': 'space_form', 'K': 1.0}},
            problem={'kind': 'heat_kernel', 'times': [1.0]},
            alphas=[],
        )
        with pytest.raises(ContractViolationError):
            parse_scenario(data)

    @allure.title('α 超出 [0, 1] 與 γ = 1 被拒絕')
    def test_ranges(self) -> None:
        """Scenario: α = 1.5、elliptic γ = 1。"""
        with pytest.raises(ContractViolationError):
            parse_scenario(_torsion_data(alphas=[1.5]))
        with pytest.raises(ContractViolationError):
            parse_scenario(_torsion_data(problem={'kind': 'elliptic', 'lambda': 1.0, 'gamma': 1.0}))

    @allure.title('steady 只適用於 power_source')
    def test_steady_requires_source(self) -> None:
        """Scenario: heat + steady 失敗。"""
        with pytest.raises(ContractViolationError):
            parse_scenario(_torsion_data(problem={'kind': 'parabolic', 'steady': True}))

    @allure.title('由 TOML 檔讀取')
    def test_load(self, tmp_path: Path) -> None:
        """Scenario: 寫入 TOML 後讀回，內容與字典版本相同。"""
        path = tmp_path / 'torsion.toml'
        path.write_text(TORSION_TOML, encoding='utf-8')
        config = load_scenario(path)
        assert config.name == 'torsion-r3'
        assert config.solver.grid_size == 256

    @allure.title('TOML 語法錯誤')
    def test_bad_toml(self, tmp_path: Path) -> None:
        """Scenario: 不合法的 TOML 拋出 ContractViolationError。"""
        path = tmp_path / 'broken.toml'
        path.write_text('config_version = = 1\n', encoding='utf-8')
        with pytest.raises(ContractViolationError):
            load_scenario(path)


@allure.feature('情境報告')
@allure.story('相同設定產生相同雜湊')
class TestScenarioHash:
    """測試 scenario_hash。"""

    @allure.title('雜湊穩定且不受輸出目錄影響')
    def test_stable(self) -> None:
        """Scenario: 兩次解析相同、只改 outputs.directory 也相同、改種子則不同。"""
        first = parse_scenario(_torsion_data())
        second = parse_scenario(_torsion_data(outputs={'directory': '/tmp/elsewhere'}))
        assert first.scenario_hash() == parse_scenario(_torsion_data()).scenario_hash()
        assert first.scenario_hash() == second.scenario_hash()
        reseeded = parse_scenario(_torsion_data(certification={'seed': 7}))
        assert reseeded.scenario_hash() != first.scenario_hash()


@allure.feature('情境報告')
@allure.story('pipeline 依問題種類填入定理標籤')
class TestPipeline:
    """測試 run_scenario。"""

    @allure.title('扭轉問題得到嚴格凹的 T1.1 與 C1.1')
    def test_torsion(self) -> None:
        """Scenario: N = 3、γ = 0、α = 1。"""
        bundle = run_scenario(parse_scenario(_torsion_data()))
        assert bundle.tags['T1.1'] == 'certified_strict'
        assert bundle.tags['C1.1'] == 'certified_strict'
        assert bundle.tags['T1.2'] == 'not_run'
        assert bundle.exit_code == 0
        assert 'solution' in bundle.profiles
        assert bundle.extras['transformed_residual'] < 1e-6
        assert all(c.scenario_hash == bundle.scenario_hash for c in bundle.certificates.values())

    @allure.title('特徵問題計算門檻與 Cheng 比較')
    def test_eigen(self) -> None:
        """Scenario: K = −1、N = 2、alphas = [0, 'auto']。"""
        data = _torsion_data(
            geometry={'N': 2, 'R': 1.0, 'factor': {'kind': 'space_form', 'K': -1.0}},
            problem={'kind': 'eigen'},
            alphas=[0.0, 'auto'],
        )
        bundle = run_scenario(parse_scenario(data))
        assert bundle.tags['T1.2'] == 'certified_strict'
        assert bundle.tags['PA.2'] == 'certified_strict'
        assert bundle.tags['CA.1'] in ('certified_strict', 'certified_weak')
        assert len(bundle.thresholds) == 1
        assert bundle.thresholds[0].cheng_ok is True

    @allure.title('熱流的 bump 得到 T1.3')
    def test_heat(self) -> None:
        """Scenario: K = −1、N = 2、t_end = 0.5。"""
        data = _torsion_data(
            geometry={'N': 2, 'R': 1.0, 'factor': {'kind': 'space_form', 'K': -1.0}},
            problem={
                'kind': 'parabolic',
                'initial': 'bump',
                't_end': 0.5,
                'sample_times': [0.01, 0.1, 0.5],
            },
            alphas=[0.0],
        )
        bundle = run_scenario(parse_scenario(data))
        assert bundle.tags['T1.3'] == 'certified_strict'
        assert len(bundle.evolutions['evolution']) == 3
        assert bundle.extras['absorption']['holds']

    @allure.title('熱核情境得到 C1.3')
    def test_heat_kernel(self) -> None:
        """Scenario: K = 0、N = 3、t ∈ {0.5, 1}。"""
        data = _torsion_data(problem={'kind': 'heat_kernel', 'times': [0.5, 1.0]}, alphas=[])
        bundle = run_scenario(parse_scenario(data))
        assert bundle.tags['C1.3'] == 'certified_strict'
        assert bundle.extras['mass']['0.5'] == pytest.approx(1.0, rel=1e-8)

    @allure.title('初值與反應項建構')
    def test_initial_and_nonlinearity(self, euclidean_disk: Ball) -> None:
        """Scenario: ring 在原點為零、power_source 取 exponent 為 γ。"""
        ring = initial_profile(euclidean_disk, 'ring', 64, 1e-8)
        assert ring.values[0] == 0.0
        assert ring.values[-1] == 0.0
        problem = ParabolicProblem(
            kind='parabolic', nonlinearity='power_source', lam=2.0, exponent=0.5
        )
        nl = build_nonlinearity(problem)
        assert (nl.kind, nl.lam, nl.exponent) == ('power_source', 2.0, 0.5)
        with pytest.raises(ValueError):
            initial_profile(euclidean_disk, 'spike', 64, 1e-8)


@allure.feature('情境報告')
@allure.story('CSV 逐位元可重現，JSON 以排序鍵輸出')
class TestEmit:
    """測試 emit 與 read_profile_csv。"""

    @allure.title('CSV 讀回與記憶體中的表格逐位元相同')
    def test_csv_round_trip(self, tmp_path: Path) -> None:
        """Scenario: profile_solution.csv 的五欄。"""
        bundle = run_scenario(parse_scenario(_torsion_data()))
        emit(bundle, tmp_path, ['csv'])
        table = read_profile_csv(tmp_path / 'torsion' / 'profile_solution.csv')
        expected = profile_table(bundle.profiles['solution'], bundle.primary_alpha)
        assert list(table) == ['r', 'v', 'w', 'w1', 'w2']
        for i, name in enumerate(table):
            np.testing.assert_array_equal(table[name], expected[:, i])

    @allure.title('兩次輸出的 JSON 位元組相同')
    def test_json_deterministic(self, tmp_path: Path) -> None:
        """Scenario: 相同設定與種子執行兩次。"""
        config = parse_scenario(_torsion_data())
        emit(run_scenario(config), tmp_path / 'a', ['json'])
        emit(run_scenario(config), tmp_path / 'b', ['json'])
        for name in ('certificates.json', 'summary.json'):
            first = (tmp_path / 'a' / 'torsion' / name).read_bytes()
            second = (tmp_path / 'b' / 'torsion' / name).read_bytes()
            assert first == second

    @allure.title('SVG 附圖')
    def test_svg(self, tmp_path: Path) -> None:
        """Scenario: svg 格式寫出解與 gap 直方圖。"""
        bundle = run_scenario(parse_scenario(_torsion_data()))
        written = emit(bundle, tmp_path, ['svg'])
        assert (tmp_path / 'torsion' / 'profile_solution.svg') in written
        assert any(p.name.startswith('gaps_') for p in written)


@allure.feature('情境報告')
@allure.story('階段失敗以 StageError 回報')
class TestStageErrors:
    """測試 StageError 與 suite 的錯誤彙整。"""

    @allure.title('幾何不合法時在 conditions 階段失敗')
    def test_bad_geometry(self) -> None:
        """Scenario: K = 1、R = 2 超出凸性半徑。"""
        data = _torsion_data(
            geometry={'N': 2, 'R': 2.0, 'factor': {'kind': 'space_form', 'K': 1.0}}
        )
        with pytest.raises(StageError) as info:
            run_scenario(parse_scenario(data))
        assert info.value.stage == 'conditions'

    @allure.title('套件摘要彙整最嚴重的結束碼')
    def test_suite_summary(self, tmp_path: Path) -> None:
        """Scenario: 一個成功、一個幾何錯誤，結束碼為 1。"""
        good = parse_scenario(_torsion_data())
        bad = parse_scenario(
            _torsion_data(
                name='bad',
                geometry={'N': 2, 'R': 2.0, 'factor': {'kind': 'space_form', 'K': 1.0}},
            )
        )
        summary = run_suite([good, bad], tmp_path, ['json'])
        assert summary['exit_code'] == 1
        assert summary['scenarios']['torsion']['exit_code'] == 0
        assert summary['scenarios']['bad']['stage'] == 'conditions'
        assert (tmp_path / SUITE_SUMMARY).is_file()


@allure.feature('情境報告')
@allure.story('內建驗收套件')
class TestBuiltinSuite:
    """測試 builtin_scenarios 與非同步執行層。"""

    @allure.title('內建情境涵蓋各問題種類')
    def test_builtin(self) -> None:
        """Scenario: 26 個情境，名稱唯一，種子一致。"""
        configs = builtin_scenarios(seed=5)
        assert len(configs) == 26
        assert len({c.name for c in configs}) == 26
        assert {c.problem.kind for c in configs} == {
            'elliptic', 'eigen', 'parabolic', 'heat_kernel'
        }
        assert all(isinstance(c, ScenarioConfig) for c in configs)
        assert all(c.certification.seed == 5 for c in configs)

    @pytest.mark.asyncio
    @allure.title('非同步層依輸入順序回傳各情境摘要')
    async def test_run_all_gathers(self, tmp_path: Path) -> None:
        """Scenario: 單一工作執行緒下兩個扭轉情境皆以結束碼 0 完成。"""
        configs = [
            parse_scenario(_torsion_data()),
            parse_scenario(_torsion_data(name='torsion-copy')),
        ]
        results = await _run_all(configs, str(tmp_path), ['json'], jobs=1)
        assert [r['name'] for r in results] == ['torsion', 'torsion-copy']
        assert all(r['exit_code'] == 0 for r in results)
        assert results[0]['scenario_hash'] != results[1]['scenario_hash']

    @pytest.mark.slow
    @allure.title('完整驗收套件全部通過')
    def test_full_suite(self, tmp_path: Path) -> None:
        """Scenario: 以兩個工作程序執行全部內建情境，結束碼為 0。"""
        summary = run_suite(builtin_scenarios(), tmp_path, ['csv', 'json'], jobs=2)
        assert summary['exit_code'] == 0
