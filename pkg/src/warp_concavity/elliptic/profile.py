"""徑向網格函數 v(r)。

所有求解器的輸出都是 RadialProfile：均勻網格 0 = r_0 < … < r_M = R 上的取值，
附帶所屬的球、問題識別與求解紀錄。
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import CubicSpline

from warp_concavity.exceptions import DomainError
from warp_concavity.geometry.ball import Ball

FloatArray = NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """均勻徑向網格上的函數值。

    Attributes:
        grid: 均勻半徑網格，grid[0] = 0、grid[-1] = R
        values: v_i
        ball: 所屬的球
        problem: 問題識別（torsion、power、eigen、evolution 等）
        residual: 邊界殘差 v(R)
        shooting_parameter: 射擊參數（v(0) 或 λ），無則為 None
        slopes: 由 ODE 積分得到的 v'(r_i)，無則以差分計算
        metadata: 其他求解紀錄
    """

    grid: FloatArray
    values: FloatArray
    ball: Ball
    problem: str = 'custom'
    residual: float = 0.0
    shooting_parameter: float | None = None
    slopes: FloatArray | None = None
    metadata: dict[str, Any] = field(default_factory=lambda: {})

    def __post_init__(self) -> None:
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise DomainError('grid 與 values 必須為同長度的一維陣列')
        if self.grid.size < 5:
            raise DomainError(f'網格至少需要 5 點: {self.grid.size}')

    # --- 網格 ---

    @property
    def step(self) -> float:
        """網格間距 h = R/M。"""
        return float(self.grid[1] - self.grid[0])

    @property
    def radius(self) -> float:
        return float(self.grid[-1])

    @property
    def scale(self) -> float:
        """max v，作為容許值的量級。"""
        return float(np.max(np.abs(self.values)))

    # --- 差分 ---

    @property
    def first_derivative(self) -> FloatArray:
        """二階中央差分 v'；原點由對稱性取 0，邊界用單側二階公式。"""
        v = self.values
        h = self.step
        d1 = np.empty_like(v)
        d1[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
        d1[0] = 0.0
        d1[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
        return d1

    @property
    def second_derivative(self) -> FloatArray:
        """二階中央差分 v''；原點用對稱延拓 2(v_1 − v_0)/h²。"""
        v = self.values
        h = self.step
        d2 = np.empty_like(v)
        d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
        d2[0] = 2.0 * (v[1] - v[0]) / (h * h)
        d2[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / (h * h)
        return d2

    @property
    def neumann_defect(self) -> float:
        """原點的單側二階一階導數 (−3v_0 + 4v_1 − v_2)/(2h)。"""
        v = self.values
        return float((-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * self.step))

    # --- 插值 ---

    def interpolant(self) -> CubicSpline:
        """三次樣條插值，原點取 v'(0) = 0 的夾持條件。"""
        return CubicSpline(self.grid, self.values, bc_type=((1, 0.0), 'not-a-knot'))

    def interpolation_error_bound(self) -> float:
        """三次樣條誤差估計 5/384·max|Δ⁴v|。"""
        if self.values.size < 5:
            return 0.0
        return 5.0 / 384.0 * float(np.max(np.abs(np.diff(self.values, n=4))))

    # --- 建構 ---

    @classmethod
    def from_function(
        cls,
        ball: Ball,
        fn: Callable[[FloatArray], FloatArray],
        grid_size: int,
        problem: str = 'custom',
    ) -> RadialProfile:
        """在 ball 的均勻網格上取樣 fn。"""
        grid = ball.uniform_grid(grid_size)
        values = np.asarray(fn(grid), dtype=np.float64)
        return cls(grid=grid, values=values, ball=ball, problem=problem, residual=float(values[-1]))

    def with_values(self, values: FloatArray, **updates: Any) -> RadialProfile:
        """保留網格與球，替換取值（slopes 會失效）。"""
        return replace(self, values=values, slopes=None, residual=float(values[-1]), **updates)

    def to_dict(self) -> dict[str, Any]:
        """摘要（不含網格資料）。"""
        return {
            'problem': self.problem,
            'grid_size': int(self.grid.size - 1),
            'radius': self.radius,
            'v0': float(self.values[0]),
            'residual': self.residual,
            'shooting_parameter': self.shooting_parameter,
            'ball': self.ball.to_dict(),
            'metadata': self.metadata,
        }
