"""截面測地線測試模組。

涵蓋：
- Rule: 積分保持速度與 Clairaut 常數
- Rule: 兩點連接的長度等於空間形式的距離，且對端點對稱
- Rule: 不合法的端點與方向被拒絕
"""

from __future__ import annotations

import math

import allure
import numpy as np
import pytest

from warp_concavity.exceptions import DomainError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.geodesic import (
    connect_geodesic,
    connect_geodesics,
    integrate_geodesic,
)


def _hyperbolic_distance(p: tuple[float, float], q: tuple[float, float]) -> float:
    """K = −1 的雙曲餘弦定律。"""
    delta = q[1] - p[1]
    value = math.cosh(p[0]) * math.cosh(q[0])
    value -= math.sinh(p[0]) * math.sinh(q[0]) * math.cos(delta)
    return math.acosh(value)


@allure.feature('測地線')
@allure.story('積分保持速度與 Clairaut 常數')
class TestIntegrateGeodesic:
    """測試 integrate_geodesic。"""

    @allure.title('從極點出發為徑向直線')
    def test_radial_from_pole(self, hyperbolic_disk: Ball) -> None:
        """Scenario: 由 o 沿徑向走 0.5，終點半徑為 0.5。"""
        geodesic = integrate_geodesic(hyperbolic_disk, (0.0, 0.0), (1.0, 0.0), 0.5, steps=256)
        assert geodesic.end[0] == pytest.approx(0.5, abs=1e-10)
        assert not geodesic.truncated

    @allure.title('一般方向的守恆量漂移很小')
    def test_conserved_quantities(self, hyperbolic_disk: Ball) -> None:
        """Scenario: 斜向射出的測地線，速度與 Clairaut 常數相對漂移 < 1e-8。"""
        geodesic = integrate_geodesic(hyperbolic_disk, (0.4, 0.0), (0.3, 1.0), 0.4)
        assert geodesic.speed_drift < 1e-8
        assert geodesic.clairaut_drift < 1e-8

    @allure.title('離開球外時截斷')
    def test_truncation(self, euclidean_disk: Ball) -> None:
        """Scenario: 由 r = 0.5 向外走 2，於 t ≈ 0.25 離開。"""
        geodesic = integrate_geodesic(euclidean_disk, (0.5, 0.0), (1.0, 0.0), 2.0, steps=512)
        assert geodesic.truncated
        assert geodesic.exit_parameter == pytest.approx(0.25, abs=1e-2)

    @allure.title('零方向與球外起點拋出 DomainError')
    def test_invalid_inputs(self, euclidean_disk: Ball) -> None:
        """Scenario: 方向為零、起點 r = R、長度為 0。"""
        with pytest.raises(DomainError):
            integrate_geodesic(euclidean_disk, (0.5, 0.0), (0.0, 0.0), 1.0)
        with pytest.raises(DomainError):
            integrate_geodesic(euclidean_disk, (1.0, 0.0), (1.0, 0.0), 1.0)
        with pytest.raises(DomainError):
            integrate_geodesic(euclidean_disk, (0.5, 0.0), (1.0, 0.0), 0.0)


@allure.feature('測地線')
@allure.story('兩點連接的長度等於空間形式的距離')
class TestConnectGeodesic:
    """測試 connect_geodesic。"""

    @allure.title('歐氏圓盤上的弦長')
    def test_euclidean_chord(self, euclidean_disk: Ball) -> None:
        """Scenario: (0.5, 0) 到 (0.5, π/2) 的距離為 0.5√2。"""
        geodesic = connect_geodesic(euclidean_disk, (0.5, 0.0), (0.5, math.pi / 2.0))
        assert geodesic.length == pytest.approx(0.5 * math.sqrt(2.0), rel=1e-7)

    @allure.title('雙曲圓盤上符合餘弦定律')
    @pytest.mark.parametrize(
        ('p', 'q'),
        [
            ((0.3, 0.0), (0.8, 2.0)),
            ((0.9, 0.1), (0.6, -1.2)),
            ((0.5, 0.0), (0.5, 3.0)),
        ],
    )
    def test_hyperbolic_distance(
        self, hyperbolic_disk: Ball, p: tuple[float, float], q: tuple[float, float]
    ) -> None:
        """Scenario: 長度與 acosh(cosh a cosh b − sinh a sinh b cos Δ) 一致。"""
        geodesic = connect_geodesic(hyperbolic_disk, p, q)
        assert geodesic.length == pytest.approx(_hyperbolic_distance(p, q), rel=1e-6)

    @allure.title('通過極點的對徑端點')
    def test_antipodal_through_pole(self, hyperbolic_disk: Ball) -> None:
        """Scenario: (0.5, 0) 到 (0.5, π) 為長度 1 的直徑，中點在極點。"""
        geodesic = connect_geodesic(hyperbolic_disk, (0.5, 0.0), (0.5, math.pi))
        assert geodesic.length == pytest.approx(1.0, rel=1e-8)
        assert geodesic.radius_at(np.array([0.5]))[0] == pytest.approx(0.0, abs=1e-6)

    @allure.title('批次連接與逐一連接一致')
    def test_batch_matches_single(self, cubic_disk: Ball) -> None:
        """Scenario: connect_geodesics 的長度與逐一呼叫相同。"""
        pairs = [((0.2, 0.0), (0.7, 1.0)), ((0.6, 0.5), (0.4, 2.5))]
        batch = connect_geodesics(cubic_disk, pairs)
        for (p, q), geodesic in zip(pairs, batch, strict=True):
            single = connect_geodesic(cubic_disk, p, q)
            assert geodesic.length == pytest.approx(single.length, rel=1e-7)

    @allure.title('距離對端點對稱')
    @pytest.mark.parametrize(
        ('p', 'q'),
        [
            ((0.2, 0.0), (0.7, 1.0)),
            ((0.6, 0.5), (0.4, 2.5)),
            ((0.8, -0.3), (0.75, 2.6)),
        ],
    )
    def test_length_symmetry(
        self, cubic_disk: Ball, p: tuple[float, float], q: tuple[float, float]
    ) -> None:
        """Scenario: |len(p, q) − len(q, p)| ≤ 2·tol。"""
        forward = connect_geodesic(cubic_disk, p, q)
        backward = connect_geodesic(cubic_disk, q, p)
        assert abs(forward.length - backward.length) <= 2e-8

    @allure.title('終點與 q 重合')
    def test_endpoint_hits_target(self, cubic_disk: Ball) -> None:
        """Scenario: 參數 t = 1 處的半徑為 r_q。"""
        geodesic = connect_geodesic(cubic_disk, (0.3, 0.0), (0.8, 1.5))
        assert geodesic.radius_at(np.array([1.0]))[0] == pytest.approx(0.8, abs=1e-7)

    @allure.title('重合端點拋出 DomainError')
    def test_coincident_endpoints(self, euclidean_disk: Ball) -> None:
        """Scenario: p = q 失敗。"""
        with pytest.raises(DomainError):
            connect_geodesic(euclidean_disk, (0.5, 1.0), (0.5, 1.0))
