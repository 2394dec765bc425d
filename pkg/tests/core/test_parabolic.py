"""徑向拋物型問題測試模組。

涵蓋：
- Rule: 熱流的特徵函數衰減、半群性質與二階時間精度
- Rule: 熱流保持對數凹性，非對數凹初值有有限的起始時間
- Rule: 吸收條件 e^{−s}G(e^s) 的檢查
- Rule: 穩態收斂到扭轉解，與射擊解不符時失敗
- Rule: 不合法的初值與參數被拒絕
"""

from __future__ import annotations

import math

import allure
import numpy as np
import pytest

from warp_concavity.concavity import certify_radial
from warp_concavity.elliptic.eigen import first_eigenpair
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.exceptions import (
    ContractViolationError,
    DomainError,
    SolverFailureError,
    StiffnessError,
)
from warp_concavity.geometry.ball import Ball
from warp_concavity.parabolic import (
    Nonlinearity,
    concavity_onset_time,
    evolve,
    geometric_times,
    steady_state,
)


def _bump(ball: Ball, grid_size: int = 256) -> RadialProfile:
    radius = ball.radius
    return RadialProfile.from_function(
        ball, lambda r: 1.0 - (r / radius) ** 2, grid_size, problem='initial'
    )


def _ring(ball: Ball, grid_size: int = 256) -> RadialProfile:
    radius = ball.radius

    def ring(r: np.ndarray) -> np.ndarray:
        x = r / radius
        return x * x * (1.0 - x * x) ** 2

    return RadialProfile.from_function(ball, ring, grid_size, problem='initial')


@allure.feature('拋物型問題')
@allure.story('熱流的特徵函數衰減與半群性質')
class TestHeatFlow:
    """測試純熱流。"""

    @allure.title('第一特徵函數以 e^{−λ₁t} 衰減')
    def test_eigen_decay(self, euclidean_ball: Ball) -> None:
        """Scenario: N = 3、R = 1，t = 0.1 時 v(0) ≈ e^{−π²/10}。"""
        eigen = first_eigenpair(euclidean_ball, grid_size=256).profile
        values = eigen.values.copy()
        values[-1] = 0.0
        initial = eigen.with_values(values)
        states = evolve(euclidean_ball, Nonlinearity.heat(), initial, 0.1, dt=1e-3)
        ratio = states[-1].profile.values[0] / initial.values[0]
        assert ratio == pytest.approx(math.exp(-0.1 * math.pi**2), rel=1e-3)

    @allure.title('分段推進與一次推進一致')
    def test_semigroup(self, hyperbolic_disk: Ball) -> None:
        """Scenario: 0 → 0.1 → 0.2 與 0 → 0.2（取樣 0.1）相同。"""
        heat = Nonlinearity.heat()
        initial = _bump(hyperbolic_disk)
        whole = evolve(hyperbolic_disk, heat, initial, 0.2, 1e-3, [0.1, 0.2])
        first = evolve(hyperbolic_disk, heat, initial, 0.1, 1e-3, [0.1])
        restart = first[-1].profile
        second = evolve(hyperbolic_disk, heat, restart, 0.1, 1e-3, [0.1])
        np.testing.assert_allclose(
            whole[-1].profile.values, second[-1].profile.values, rtol=1e-8, atol=1e-15
        )
        assert [s.t for s in whole] == [0.1, 0.2]

    @allure.title('由 evolve 狀態接續時不重做起步')
    def test_restart_skips_smoothing(self, hyperbolic_disk: Ball) -> None:
        """Scenario: 接續時強制 smoothing=True 會偏離一次推進的結果。"""
        heat = Nonlinearity.heat()
        initial = _bump(hyperbolic_disk, 64)
        whole = evolve(hyperbolic_disk, heat, initial, 0.2, 1e-2, [0.1, 0.2])
        restart = evolve(hyperbolic_disk, heat, initial, 0.1, 1e-2, [0.1])[-1].profile
        assert restart.problem == 'evolution'
        forced = evolve(hyperbolic_disk, heat, restart, 0.1, 1e-2, [0.1], smoothing=True)
        gap = np.max(np.abs(whole[-1].profile.values - forced[-1].profile.values))
        assert gap > 1e-10

    @allure.title('Crank–Nicolson 時間誤差為二階')
    def test_time_order(self, hyperbolic_disk: Ball) -> None:
        """Scenario: dt 減半時相鄰解的差距約縮小 4 倍。"""
        heat = Nonlinearity.heat()
        initial = _bump(hyperbolic_disk, 64)
        finals = [
            evolve(hyperbolic_disk, heat, initial, 0.2, dt, [0.2])[-1].profile.values
            for dt in (0.01, 0.005, 0.0025)
        ]
        coarse = np.max(np.abs(finals[0] - finals[1]))
        fine = np.max(np.abs(finals[1] - finals[2]))
        assert 3.5 <= coarse / fine <= 4.5

    @allure.title('最大值原理')
    def test_maximum_principle(self, hyperbolic_disk: Ball) -> None:
        """Scenario: 熱流下 v ≥ 0 且 max v 非遞增。"""
        states = evolve(hyperbolic_disk, Nonlinearity.heat(), _bump(hyperbolic_disk, 64), 1.0)
        peaks = [float(np.max(s.profile.values)) for s in states]
        assert all(b <= a + 1e-12 for a, b in zip(peaks, peaks[1:], strict=False))
        assert all(float(np.min(s.profile.values)) >= -1e-8 for s in states)

    @allure.title('預設取樣時間為幾何序列')
    def test_geometric_times(self) -> None:
        """Scenario: 1e-4·2^k 直到 t_end，最後補上 t_end。"""
        times = geometric_times(1.0)
        assert times[0] == pytest.approx(1e-4)
        assert times[-1] == 1.0
        assert all(b > a for a, b in zip(times, times[1:], strict=False))


@allure.feature('拋物型問題')
@allure.story('熱流保持對數凹性，非對數凹初值有有限的起始時間')
class TestConcavityInTime:
    """測試凹性的保持與起始時間。"""

    @allure.title('對數凹 bump 在熱流下保持嚴格對數凹')
    def test_log_concavity_preserved(self, hyperbolic_disk: Ball) -> None:
        """Scenario: K = −1、N = 2 上的 1 − r²，t ∈ {0.01, 0.1, 1, 3}。"""
        states = evolve(
            hyperbolic_disk, Nonlinearity.heat(), _bump(hyperbolic_disk), 3.0,
            sample_times=[0.01, 0.1, 1.0, 3.0],
        )
        for state in states:
            assert certify_radial(state.profile, alpha=0.0).verdict == 'certified_strict'

    @allure.title('吸收項同樣保持對數凹性')
    def test_absorption_preserves(self, hyperbolic_disk: Ball) -> None:
        """Scenario: G(s) = s²，t ∈ {0.05, 0.5}。"""
        nl = Nonlinearity.power_absorption(1.0, 2.0)
        states = evolve(
            hyperbolic_disk, nl, _bump(hyperbolic_disk), 0.5, sample_times=[0.05, 0.5]
        )
        for state in states:
            assert certify_radial(state.profile, alpha=0.0).strict

    @allure.title('環狀初值在有限時間後變成對數凹')
    def test_ring_onset(self, hyperbolic_disk: Ball) -> None:
        """Scenario: r²(1 − r²)² 不是對數凹，起始時間有限且晚於第一個取樣。"""
        states = evolve(hyperbolic_disk, Nonlinearity.heat(), _ring(hyperbolic_disk), 2.0)
        onset = concavity_onset_time(states, 0.0)
        assert onset is not None
        assert onset > states[0].t

    @allure.title('源項由零初值出發，最終 α = 1 凹')
    def test_source_onset(self, euclidean_ball: Ball) -> None:
        """Scenario: ∂_t u = Δu + 1 由 0 出發，onset 有限。"""
        zero = RadialProfile.from_function(euclidean_ball, np.zeros_like, 128)
        states = evolve(euclidean_ball, Nonlinearity.power_source(1.0, 0.0), zero, 3.0)
        assert concavity_onset_time(states, 1.0) is not None


@allure.feature('拋物型問題')
@allure.story('吸收條件 e^{−s}G(e^s) 的檢查')
class TestNonlinearity:
    """測試 Nonlinearity。"""

    @allure.title('G(s) = s² 與純熱流滿足條件')
    def test_admissible(self) -> None:
        """Scenario: e^{−s}G(e^s) = e^s 非負、非遞減、凸。"""
        assert Nonlinearity.power_absorption(1.0, 2.0).check_condition().holds
        assert Nonlinearity.heat().check_condition().holds

    @allure.title('G(s) = √s 違反非遞減')
    def test_sublinear_absorption(self) -> None:
        """Scenario: e^{−s/2} 遞減。"""
        report = Nonlinearity.absorption(np.sqrt).check_condition()
        assert not report.holds
        assert not report.nondecreasing

    @allure.title('源項沒有吸收條件')
    def test_source_has_no_condition(self) -> None:
        """Scenario: power_source 拋出 ContractViolationError。"""
        with pytest.raises(ContractViolationError):
            Nonlinearity.power_source(1.0, 0.5).check_condition()

    @allure.title('參數範圍檢查')
    def test_validation(self) -> None:
        """Scenario: ν < 1、γ > 1、λ < 0、absorption 缺 G。"""
        with pytest.raises(DomainError):
            Nonlinearity.power_absorption(1.0, 0.5)
        with pytest.raises(DomainError):
            Nonlinearity.power_source(1.0, 1.5)
        with pytest.raises(DomainError):
            Nonlinearity.power_absorption(-1.0, 2.0)
        with pytest.raises(ContractViolationError):
            Nonlinearity('absorption')


@allure.feature('拋物型問題')
@allure.story('穩態收斂到扭轉解')
class TestSteadyState:
    """測試 steady_state。"""

    @allure.title('γ = 0 的穩態為 (1 − r²)/6')
    def test_torsion_limit(self, euclidean_ball: Ball) -> None:
        """Scenario: K = 0、N = 3、R = 1、λ = 1。"""
        profile = steady_state(euclidean_ball, 1.0, 0.0, tol=1e-7, grid_size=256)
        exact = (1.0 - profile.grid**2) / 6.0
        assert np.max(np.abs(profile.values - exact)) < 1e-6
        assert profile.metadata['shooting_gap'] < 1e-5
        assert profile.problem == 'steady'

    @allure.title('γ = 1 拋出 ContractViolationError')
    def test_resonant(self, euclidean_ball: Ball) -> None:
        """Scenario: 與第一特徵值共振。"""
        with pytest.raises(ContractViolationError):
            steady_state(euclidean_ball, 1.0, 1.0)

    @allure.title('與射擊解差距超過 10·tol 拋出 SolverFailureError')
    def test_shooting_mismatch(self, hyperbolic_disk: Ball) -> None:
        """Scenario: 32 格的差分誤差遠大於 tol = 1e-9。"""
        with pytest.raises(SolverFailureError, match='射擊解'):
            steady_state(hyperbolic_disk, 1.0, 0.0, tol=1e-9, grid_size=32)


@allure.feature('拋物型問題')
@allure.story('不合法的初值與參數被拒絕')
class TestEvolveValidation:
    """測試 evolve 的輸入檢查。"""

    @allure.title('負初值與非零邊界值')
    def test_invalid_initial(self, euclidean_disk: Ball) -> None:
        """Scenario: v < 0 或 v(R) ≠ 0 拋出 DomainError。"""
        heat = Nonlinearity.heat()
        negative = RadialProfile.from_function(euclidean_disk, lambda r: r * r - 0.5, 32)
        with pytest.raises(DomainError):
            evolve(euclidean_disk, heat, negative, 0.1)
        shifted = RadialProfile.from_function(euclidean_disk, lambda r: 2.0 - r * r, 32)
        with pytest.raises(DomainError):
            evolve(euclidean_disk, heat, shifted, 0.1)
        with pytest.raises(DomainError):
            evolve(euclidean_disk, heat, _bump(euclidean_disk, 32), 0.0)

    @allure.title('顯式反應步破壞正值性時拋出 StiffnessError')
    def test_stiffness(self, euclidean_disk: Ball) -> None:
        """Scenario: λ = 1e4、dt = 0.1 的線性吸收。"""
        nl = Nonlinearity.power_absorption(1e4, 1.0)
        with pytest.raises(StiffnessError):
            evolve(euclidean_disk, nl, _bump(euclidean_disk, 32), 1.0, dt=0.1)
