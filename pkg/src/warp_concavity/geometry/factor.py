"""彎曲因子 σ 的基底類別與三種實作。

旋轉對稱球以彎曲積 dρ² + σ(ρ)²·g_{S^{N−1}} 表示；σ 及其三階以內導數決定全部幾何量。
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import BSpline, make_interp_spline

from warp_concavity.exceptions import DomainError
from warp_concavity.types import FactorKind

FloatArray = NDArray[np.float64]

# 與定義域端點比較時容許的相對誤差
_DOMAIN_SLACK = 1e-12


class FactorDerivatives(NamedTuple):
    """σ 與其一到三階導數（同形陣列）。"""

    sigma: FloatArray
    d1: FloatArray
    d2: FloatArray
    d3: FloatArray


class LogDerivatives(NamedTuple):
    """(log σ)'、(log σ)''、(log σ)'''。"""

    d1: FloatArray
    d2: FloatArray
    d3: FloatArray


# =============================================================================
# WarpedFactor ABC
# =============================================================================


class WarpedFactor(ABC):
    """彎曲因子抽象介面。

    子類別只需提供解析（或插值）的導數計算與定義域上界；
    定義域檢查與 log-導數的商公式由基底類別統一處理。
    """

    @property
    @abstractmethod
    def kind(self) -> FactorKind:
        """因子種類。"""
        ...

    @property
    def r_max(self) -> float:
        """σ 保持為正的最大半徑（開區間上界）。"""
        return math.inf

    @abstractmethod
    def _evaluate(self, r: FloatArray) -> FactorDerivatives:
        """在已驗證的半徑上計算 σ、σ'、σ''、σ'''。"""
        ...

    @abstractmethod
    def third_derivative_at_origin(self) -> float:
        """σ'''(0)，由 Taylor 資料取得，用於 r → 0 的極限。"""
        ...

    @abstractmethod
    def parameters(self) -> dict[str, Any]:
        """可序列化的參數描述。"""
        ...

    # --- 定義域 ---

    def _validate(self, r: ArrayLike) -> FloatArray:
        arr = np.atleast_1d(np.asarray(r, dtype=np.float64))
        if np.any(~(arr > 0.0)):
            raise DomainError(f'彎曲因子只在 r > 0 定義，收到 {float(np.min(arr))}')
        limit = self.r_max
        if math.isfinite(limit) and np.any(arr > limit * (1.0 + _DOMAIN_SLACK)):
            raise DomainError(f'半徑 {float(np.max(arr))} 超出因子定義域 (0, {limit}]')
        return arr

    # --- 公開計算 ---

    def derivatives(self, r: ArrayLike) -> FactorDerivatives:
        """計算 σ 與導數。

        Raises:
            DomainError: r ≤ 0 或超出定義域
        """
        return self._evaluate(self._validate(r))

    def log_derivatives(self, r: ArrayLike) -> LogDerivatives:
        """以商公式計算 (log σ) 的一到三階導數。"""
        s, s1, s2, s3 = self.derivatives(r)
        d1 = s1 / s
        d2 = (s * s2 - s1 * s1) / (s * s)
        d3 = s3 / s - 3.0 * s1 * s2 / (s * s) + 2.0 * s1**3 / s**3
        return LogDerivatives(d1, d2, d3)

    def curvature(self, r: ArrayLike) -> FloatArray:
        """徑向截面曲率 −σ''/σ。"""
        s, _, s2, _ = self.derivatives(r)
        return -s2 / s

    def unsafe_derivatives(self, r: FloatArray) -> FactorDerivatives:
        """略過定義域檢查的導數計算，供內層積分迴圈使用。"""
        return self._evaluate(r)

    def to_dict(self) -> dict[str, Any]:
        """轉換為可序列化的字典。"""
        return {'kind': self.kind, **self.parameters()}


# =============================================================================
# 實作
# =============================================================================


@dataclass(frozen=True)
class SpaceFormFactor(WarpedFactor):
    """常曲率空間形式 σ_K。

    K > 0 為 sin 型、K = 0 為恆等、K < 0 為 sinh 型，導數皆為解析式。
    """

    curvature_k: float

    @property
    def kind(self) -> FactorKind:
        return 'space_form'

    @property
    def r_max(self) -> float:
        if self.curvature_k > 0.0:
            return math.pi / math.sqrt(self.curvature_k)
        return math.inf

    def _evaluate(self, r: FloatArray) -> FactorDerivatives:
        k = self.curvature_k
        if k > 0.0:
            root = math.sqrt(k)
            sigma = np.sin(root * r) / root
            d1 = np.cos(root * r)
        elif k < 0.0:
            root = math.sqrt(-k)
            sigma = np.sinh(root * r) / root
            d1 = np.cosh(root * r)
        else:
            sigma = r.copy()
            d1 = np.ones_like(r)
        # σ'' = −Kσ，σ''' = −Kσ'
        return FactorDerivatives(sigma, d1, -k * sigma, -k * d1)

    def third_derivative_at_origin(self) -> float:
        return -self.curvature_k

    def parameters(self) -> dict[str, Any]:
        return {'K': self.curvature_k}


@dataclass(frozen=True)
class CubicPerturbedFactor(WarpedFactor):
    """三次擾動因子 σ(r) = r + c·r³。"""

    c: float

    @property
    def kind(self) -> FactorKind:
        return 'cubic_perturbed'

    @property
    def r_max(self) -> float:
        if self.c < 0.0:
            return 1.0 / math.sqrt(-self.c)
        return math.inf

    def _evaluate(self, r: FloatArray) -> FactorDerivatives:
        c = self.c
        return FactorDerivatives(
            r + c * r**3,
            1.0 + 3.0 * c * r * r,
            6.0 * c * r,
            np.full_like(r, 6.0 * c),
        )

    def third_derivative_at_origin(self) -> float:
        return 6.0 * self.c

    def parameters(self) -> dict[str, Any]:
        return {'c': self.c}


@dataclass(frozen=True, eq=False)
class TabulatedFactor(WarpedFactor):
    """以節點表給定的因子，使用五次 B-spline 插值（C⁴）。

    擬合資料做奇延拓 σ(−r) = −σ(r) 並補上原點，使 σ''(0) = 0 由對稱性成立。
    """

    nodes: tuple[float, ...]
    values: tuple[float, ...]
    _spline: BSpline = field(init=False, repr=False)

    def __post_init__(self) -> None:
        radii = np.asarray(self.nodes, dtype=np.float64)
        sigma = np.asarray(self.values, dtype=np.float64)
        if radii.shape != sigma.shape or radii.ndim != 1:
            raise DomainError('nodes 與 values 長度必須相同')
        if radii.size < 3:
            raise DomainError('五次樣條至少需要 3 個節點')
        if np.any(radii <= 0.0) or np.any(np.diff(radii) <= 0.0):
            raise DomainError('nodes 必須為嚴格遞增的正半徑')
        if np.any(sigma <= 0.0):
            raise DomainError('values 必須為正')

        x = np.concatenate([-radii[::-1], [0.0], radii])
        y = np.concatenate([-sigma[::-1], [0.0], sigma])
        object.__setattr__(self, '_spline', make_interp_spline(x, y, k=5))

    @property
    def kind(self) -> FactorKind:
        return 'tabulated'

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def _evaluate(self, r: FloatArray) -> FactorDerivatives:
        spline = self._spline
        return FactorDerivatives(
            np.asarray(spline(r), dtype=np.float64),
            np.asarray(spline(r, nu=1), dtype=np.float64),
            np.asarray(spline(r, nu=2), dtype=np.float64),
            np.asarray(spline(r, nu=3), dtype=np.float64),
        )

    def third_derivative_at_origin(self) -> float:
        return float(self._spline(0.0, nu=3))

    def parameters(self) -> dict[str, Any]:
        return {'nodes': list(self.nodes), 'values': list(self.values)}


# =============================================================================
# 模組層級操作
# =============================================================================


def space_form_factor(curvature_k: float) -> SpaceFormFactor:
    """建立常曲率 K 的空間形式因子 σ_K。"""
    return SpaceFormFactor(float(curvature_k))


def log_sigma_derivs(factor: WarpedFactor, r: float) -> tuple[float, float, float]:
    """回傳 ((log σ)', (log σ)'', (log σ)''') 在單一半徑 r 的值。

    Raises:
        DomainError: r ≤ 0 或超出因子定義域
    """
    d1, d2, d3 = factor.log_derivatives(r)
    return float(d1[0]), float(d2[0]), float(d3[0])


def radial_sectional_curvature(factor: WarpedFactor, r: float) -> float:
    """徑向截面曲率 −σ''(r)/σ(r)。"""
    return float(factor.curvature(r)[0])


def convexity_radius_space_form(curvature_k: float) -> float:
    """空間形式的凸性半徑 r_K：K > 0 為 π/(2√K)，否則為 +∞。"""
    if curvature_k > 0.0:
        return math.pi / (2.0 * math.sqrt(curvature_k))
    return math.inf


def factor_from_dict(data: dict[str, Any]) -> WarpedFactor:
    """由 to_dict() 的輸出重建因子。"""
    kind = data.get('kind')
    if kind == 'space_form':
        return SpaceFormFactor(float(data['K']))
    if kind == 'cubic_perturbed':
        return CubicPerturbedFactor(float(data['c']))
    if kind == 'tabulated':
        return TabulatedFactor(
            tuple(float(x) for x in data['nodes']),
            tuple(float(x) for x in data['values']),
        )
    raise DomainError(f'未知的因子種類: {kind!r}')
