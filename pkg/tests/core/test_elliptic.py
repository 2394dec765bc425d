"""橢圓型徑向問題測試模組。

涵蓋：
- Rule: 扭轉問題重現 (R² − r²)/(2N)，網格加倍時四階收斂
- Rule: 第一特徵值符合 Bessel 零點與雙曲閉式
- Rule: 冪次非線性的齊次縮放
- Rule: 非線性項可容許性檢查
- Rule: 不合法的參數被拒絕
"""

from __future__ import annotations

import math

import allure
import numpy as np
import pytest

from warp_concavity.elliptic.bessel import bessel_first_zero
from warp_concavity.elliptic.eigen import eigenvalue_space_form, first_eigenpair
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.elliptic.shooting import (
    check_nonlinearity,
    solve_dirichlet_bvp,
    solve_power_bvp,
)
from warp_concavity.exceptions import ContractViolationError, DomainError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.factor import space_form_factor


@allure.feature('橢圓型問題')
@allure.story('扭轉問題重現 (R² − r²)/(2N)')
class TestTorsion:
    """測試 γ = 0 的扭轉問題。"""

    @allure.title('N = 3 的扭轉解')
    def test_torsion_n3(self, euclidean_ball: Ball) -> None:
        """Scenario: −Δu = 1 於單位球，u = (1 − r²)/6。"""
        profile = solve_power_bvp(euclidean_ball, 1.0, 0.0, grid_size=1024)
        exact = (1.0 - profile.grid**2) / 6.0
        assert np.max(np.abs(profile.values - exact)) < 1e-8
        assert profile.shooting_parameter == pytest.approx(1.0 / 6.0, rel=1e-8)

    @allure.title('N = 2 的扭轉解')
    def test_torsion_n2(self, euclidean_disk: Ball) -> None:
        """Scenario: −Δu = 1 於單位圓盤，u = (1 − r²)/4。"""
        profile = solve_power_bvp(euclidean_disk, 1.0, 0.0, grid_size=1024)
        exact = (1.0 - profile.grid**2) / 4.0
        assert np.max(np.abs(profile.values - exact)) < 1e-8

    @allure.title('網格加倍時 v(0) 以四階收斂')
    def test_mesh_convergence(self, hyperbolic_disk: Ball) -> None:
        """Scenario: M = 12、24、48 的相鄰 v(0) 變化比落在 [8, 32]。"""
        centers = [
            solve_power_bvp(hyperbolic_disk, 1.0, 0.0, grid_size=m).values[0]
            for m in (12, 24, 48)
        ]
        coarse = abs(centers[0] - centers[1])
        fine = abs(centers[1] - centers[2])
        assert 8.0 <= coarse / fine <= 32.0

    @allure.title('邊界殘差與原點 Neumann 條件')
    def test_boundary_conditions(self, hyperbolic_disk: Ball) -> None:
        """Scenario: |v(R)| ≤ tol·v(0)，v'(0) 的單側差分為 O(h²)。"""
        profile = solve_power_bvp(hyperbolic_disk, 1.0, 0.0, grid_size=1024)
        assert abs(profile.residual) <= 1e-8 * profile.values[0]
        assert abs(profile.neumann_defect) < 1e-5
        assert np.all(profile.values[:-1] > 0.0)


@allure.feature('橢圓型問題')
@allure.story('第一特徵值符合 Bessel 零點與雙曲閉式')
class TestEigen:
    """測試 first_eigenpair。"""

    @allure.title('Bessel 零點')
    def test_bessel_zeros(self) -> None:
        """Scenario: j_0、j_{1/2} = π、j_1。"""
        assert bessel_first_zero(0.0) == pytest.approx(2.404825557695773, rel=1e-13)
        assert bessel_first_zero(0.5) == pytest.approx(math.pi, rel=1e-13)
        assert bessel_first_zero(1.0) == pytest.approx(3.831705970207512, rel=1e-13)
        with pytest.raises(DomainError):
            bessel_first_zero(-1.0)

    @allure.title('單位球的 λ₁ = π²')
    def test_unit_ball(self, euclidean_ball: Ball) -> None:
        """Scenario: N = 3、K = 0、R = 1。"""
        solution = first_eigenpair(euclidean_ball)
        assert solution.lambda1 == pytest.approx(math.pi**2, rel=1e-6)
        assert solution.profile.values[0] == pytest.approx(1.0)
        assert solution.sturm_monotone
        assert solution.rayleigh_gap < 1e-5

    @allure.title('單位圓盤的 λ₁ = j₀²')
    def test_unit_disk(self, euclidean_disk: Ball) -> None:
        """Scenario: N = 2、K = 0、R = 1。"""
        solution = first_eigenpair(euclidean_disk)
        assert solution.lambda1 == pytest.approx(bessel_first_zero(0.0) ** 2, rel=1e-6)

    @allure.title('雙曲三維球的 λ₁ = 1 + π²/R²')
    def test_hyperbolic_ball(self) -> None:
        """Scenario: K = −1、N = 3、R = 1，特徵函數 sin(πr)/sinh r。"""
        ball = Ball(3, 1.0, space_form_factor(-1.0))
        solution = first_eigenpair(ball)
        assert solution.lambda1 == pytest.approx(1.0 + math.pi**2, rel=1e-6)
        grid = solution.profile.grid[1:-1]
        exact = np.sin(math.pi * grid) / np.sinh(grid) / math.pi
        np.testing.assert_allclose(solution.profile.values[1:-1], exact, atol=1e-5)

    @allure.title('空間形式特徵值隨半徑縮放')
    def test_scaling(self) -> None:
        """Scenario: K = 0 時 λ₁(R) = λ₁(1)/R²。"""
        half = eigenvalue_space_form(0.0, 0.5, 2)
        unit = eigenvalue_space_form(0.0, 1.0, 2)
        assert half == pytest.approx(4.0 * unit, rel=1e-6)


@allure.feature('橢圓型問題')
@allure.story('冪次非線性的齊次縮放')
class TestPowerProblem:
    """測試 solve_power_bvp 的 γ ∈ (0, 1)。"""

    @allure.title('u_λ = λ^{1/(1−γ)}·u_1')
    def test_homogeneity(self, hyperbolic_disk: Ball) -> None:
        """Scenario: γ = ½ 時 λ = 2 的 v(0) 為 λ = 1 的 4 倍。"""
        base = solve_power_bvp(hyperbolic_disk, 1.0, 0.5, grid_size=1024)
        scaled = solve_power_bvp(hyperbolic_disk, 2.0, 0.5, grid_size=1024)
        assert scaled.values[0] == pytest.approx(4.0 * base.values[0], rel=1e-6)

    @allure.title('一般 F 的 Dirichlet 問題')
    def test_general_source(self, cubic_disk: Ball) -> None:
        """Scenario: F(s) = 1 + s 於三次擾動圓盤，解為正且邊界殘差小。"""
        profile = solve_dirichlet_bvp(cubic_disk, lambda s: 1.0 + s, grid_size=1024)
        assert np.all(profile.values[:-1] > 0.0)
        assert abs(profile.residual) <= 1e-8 * profile.values[0]

    @allure.title('γ = 1 要求改用 first_eigenpair')
    def test_gamma_one(self, euclidean_disk: Ball) -> None:
        """Scenario: γ = 1 拋出 ContractViolationError。"""
        with pytest.raises(ContractViolationError):
            solve_power_bvp(euclidean_disk, 1.0, 1.0)

    @allure.title('λ ≤ 0 或 γ 超出範圍拋出 DomainError')
    def test_invalid_parameters(self, euclidean_disk: Ball) -> None:
        """Scenario: λ = 0、γ = 1.5。"""
        with pytest.raises(DomainError):
            solve_power_bvp(euclidean_disk, 0.0, 0.5)
        with pytest.raises(DomainError):
            solve_power_bvp(euclidean_disk, 1.0, 1.5)


@allure.feature('橢圓型問題')
@allure.story('非線性項可容許性檢查')
class TestNonlinearityCheck:
    """測試 check_nonlinearity。"""

    @allure.title('λs^γ 在 α = 1 − γ 可容許')
    def test_power_admissible(self) -> None:
        """Scenario: s^{α−1}·λs^γ 為常數。"""
        report = check_nonlinearity(lambda s: 2.0 * s**0.5, 0.5)
        assert report.holds
        assert report.min_value > 0.0

    @allure.title('s² 在 α = ½ 不可容許')
    def test_superlinear_rejected(self) -> None:
        """Scenario: s^{−½}·s² 遞增。"""
        report = check_nonlinearity(lambda s: s * s, 0.5)
        assert not report.holds
        assert report.worst_increase > 0.0

    @allure.title('α 超出 [0, 1] 拋出 ContractViolationError')
    def test_invalid_alpha(self) -> None:
        """Scenario: α = 2。"""
        with pytest.raises(ContractViolationError):
            check_nonlinearity(lambda s: 1.0, 2.0)


@allure.feature('橢圓型問題')
@allure.story('徑向網格函數')
class TestRadialProfile:
    """測試 RadialProfile 的差分與建構。"""

    @allure.title('二次函數的差分導數為精確值')
    def test_quadratic_derivatives(self, euclidean_ball: Ball) -> None:
        """Scenario: v = 1 − r² 的 v' = −2r、v'' = −2。"""
        profile = RadialProfile.from_function(euclidean_ball, lambda r: 1.0 - r * r, 64)
        np.testing.assert_allclose(profile.first_derivative, -2.0 * profile.grid, atol=1e-12)
        np.testing.assert_allclose(profile.second_derivative, -2.0, atol=1e-9)
        assert profile.interpolation_error_bound() == pytest.approx(0.0, abs=1e-15)

    @allure.title('with_values 保留網格並更新殘差')
    def test_with_values(self, euclidean_ball: Ball) -> None:
        """Scenario: 替換取值後 residual 為新的 v(R)。"""
        profile = RadialProfile.from_function(euclidean_ball, lambda r: 1.0 - r * r, 16)
        shifted = profile.with_values(profile.values + 0.5, problem='shifted')
        assert shifted.residual == pytest.approx(0.5)
        assert shifted.problem == 'shifted'
        assert shifted.grid is profile.grid

    @allure.title('網格過小拋出 DomainError')
    def test_too_small(self, euclidean_ball: Ball) -> None:
        """Scenario: 3 點網格失敗。"""
        grid = np.linspace(0.0, 1.0, 3)
        with pytest.raises(DomainError):
            RadialProfile(grid=grid, values=grid.copy(), ball=euclidean_ball)
