"""旋轉對稱球 B(R)。"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from warp_concavity.exceptions import DomainError
from warp_concavity.geometry.factor import (
    SpaceFormFactor,
    WarpedFactor,
    convexity_radius_space_form,
    factor_from_dict,
)

FloatArray = NDArray[np.float64]

# 建構時檢查 σ' > 0 的內部節點數
_VERIFICATION_GRID = 512


@dataclass(frozen=True)
class Ball:
    """所有問題共用的定義域：維度 N、半徑 R 與彎曲因子。

    建構時在 (0, R) 的驗證網格上確認 σ' > 0（強凸性的必要條件），
    正曲率空間形式另外要求 R ≤ r_K。

    Attributes:
        dimension: 維度 N ≥ 2
        radius: 半徑 R > 0
        factor: 彎曲因子 σ
    """

    dimension: int
    radius: float
    factor: WarpedFactor

    def __post_init__(self) -> None:
        if self.dimension < 2 or int(self.dimension) != self.dimension:
            raise DomainError(f'維度 N 必須為 ≥ 2 的整數: {self.dimension}')
        if not (self.radius > 0.0) or not math.isfinite(self.radius):
            raise DomainError(f'半徑 R 必須為正: {self.radius}')
        if self.radius > self.factor.r_max * (1.0 + 1e-12):
            raise DomainError(f'半徑 R={self.radius} 超出因子定義域 {self.factor.r_max}')
        if isinstance(self.factor, SpaceFormFactor) and self.factor.curvature_k > 0.0:
            r_k = convexity_radius_space_form(self.factor.curvature_k)
            if self.radius > r_k * (1.0 + 1e-12):
                raise DomainError(f'正曲率空間形式要求 R ≤ r_K = {r_k}，收到 {self.radius}')
        self._verify_convexity()

    def _verify_convexity(self) -> None:
        nodes = np.linspace(0.0, self.radius, _VERIFICATION_GRID + 1)[1:-1]
        _, s1, _, _ = self.factor.derivatives(nodes)
        idx = int(np.argmin(s1))
        if not (s1[idx] > 0.0):
            raise DomainError(
                f"球不滿足 σ' > 0：σ'({nodes[idx]:.6g}) = {float(s1[idx]):.6g}"
            )

    def drift_coefficient(self, r: FloatArray) -> FloatArray:
        """徑向 Laplacian 的一階項係數 (N−1)(log σ)'(r)。"""
        s, s1, _, _ = self.factor.derivatives(r)
        return (self.dimension - 1) * s1 / s

    def uniform_grid(self, grid_size: int) -> FloatArray:
        """0 = r_0 < … < r_M = R 的均勻網格。"""
        if grid_size < 4:
            raise DomainError(f'網格大小至少為 4: {grid_size}')
        return np.linspace(0.0, self.radius, grid_size + 1)

    def to_dict(self) -> dict[str, Any]:
        """轉換為可序列化的字典。"""
        return {'N': self.dimension, 'R': self.radius, 'factor': self.factor.to_dict()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Ball:
        """由 to_dict() 的輸出重建。"""
        return cls(
            dimension=int(data['N']),
            radius=float(data['R']),
            factor=factor_from_dict(data['factor']),
        )
