"""α 門檻與曲率比較。

A(σ, R, N) = (N−1)/λ₁·inf_{(0,R)} (−(log σ)'')：0 < α ≤ A 時第一特徵函數為 α-凹。
另外提供截面曲率上下界、Cheng 比較 λ₁(B(R)) ≥ λ₁(K_max, R, N)
以及 R → 0 的小球極限 (N−1)/j²_{(N−2)/2}。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from warp_concavity.config import DEFAULT_CONDITION_GRID, DEFAULT_GRID_SIZE, DEFAULT_TOL
from warp_concavity.elliptic.bessel import bessel_first_zero
from warp_concavity.elliptic.eigen import eigenvalue_space_form, first_eigenpair
from warp_concavity.exceptions import ContractViolationError, DomainError, UnsupportedError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.conditions import condition_grid
from warp_concavity.geometry.factor import convexity_radius_space_form, space_form_factor
from warp_concavity.types import ThresholdDict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdReport:
    """α 門檻報告。

    Attributes:
        A: (N−1)/λ₁·inf(−(log σ)'')
        lambda1_used: 使用的 λ₁
        inf_point: 下確界所在半徑
        curvature_bounds: (K_min, K_max)
        cheng_ok: Cheng 比較結果，未檢查為 None
        admissible: A > 0
        alternative_A: 以 −σ''/σ − (1−σ'²)/σ² + 1/σ² 計算的同一門檻
    """

    A: float
    lambda1_used: float
    inf_point: float
    curvature_bounds: tuple[float, float]
    cheng_ok: bool | None
    admissible: bool
    alternative_A: float

    @property
    def relative_disagreement(self) -> float:
        """兩種被積函數算出的 A 之相對差。"""
        return abs(self.A - self.alternative_A) / max(abs(self.A), np.finfo(float).tiny)

    def with_cheng(self, ok: bool) -> ThresholdReport:
        return replace(self, cheng_ok=ok)

    def to_dict(self) -> ThresholdDict:
        return ThresholdDict(
            A=self.A,
            lambda1_used=self.lambda1_used,
            inf_point=self.inf_point,
            curvature_bounds=self.curvature_bounds,
            cheng_ok=self.cheng_ok,
            admissible=self.admissible,
            alternative_A=self.alternative_A,
        )


@dataclass(frozen=True)
class ChengReport:
    """λ₁(B(R)) 與常曲率 K_max 比較球的特徵值。"""

    holds: bool
    lambda1: float
    comparison: float
    k_max: float

    @property
    def relative_gap(self) -> float:
        return (self.lambda1 - self.comparison) / self.comparison

    def to_dict(self) -> dict[str, Any]:
        return {
            'holds': self.holds,
            'lambda1': self.lambda1,
            'comparison': self.comparison,
            'K_max': self.k_max,
            'relative_gap': self.relative_gap,
        }


def curvature_bounds(
    ball: Ball, grid_size: int = DEFAULT_CONDITION_GRID
) -> tuple[float, float]:
    """(K_min, K_max)：−σ''/σ 在 (δ₀, R] 上與 r → 0 極限 −σ'''(0) 的極值。"""
    curvature = ball.factor.curvature(condition_grid(ball, grid_size))
    pole = -ball.factor.third_derivative_at_origin()
    k_min = min(float(np.min(curvature)), pole)
    k_max = max(float(np.max(curvature)), pole)
    return k_min, k_max


def alpha_threshold(
    ball: Ball,
    lambda1: float,
    grid_size: int = DEFAULT_CONDITION_GRID,
) -> ThresholdReport:
    """由網格下確界計算 A(σ, R, N)。

    Raises:
        ContractViolationError: λ₁ ≤ 0
    """
    if not (lambda1 > 0.0):
        raise ContractViolationError(f'alpha_threshold 需要 λ₁ > 0，收到 {lambda1}')
    grid = condition_grid(ball, grid_size)
    factor = ball.factor
    integrand = -factor.log_derivatives(grid).d2
    idx = int(np.argmin(integrand))
    scale = (ball.dimension - 1) / lambda1
    threshold = scale * float(integrand[idx])

    sigma, d1, _, _ = factor.derivatives(grid)
    alternative = factor.curvature(grid) - (1.0 - d1 * d1) / sigma**2 + 1.0 / sigma**2
    alternative_threshold = scale * float(np.min(alternative))

    report = ThresholdReport(
        A=threshold,
        lambda1_used=lambda1,
        inf_point=float(grid[idx]),
        curvature_bounds=curvature_bounds(ball, grid_size),
        cheng_ok=None,
        admissible=threshold > 0.0,
        alternative_A=alternative_threshold,
    )
    if not report.admissible:
        logger.warning('沒有可容許的 α：(log σ)\'\' 在某處非負', extra={'A': threshold})
    logger.info(
        'α 門檻',
        extra={'A': threshold, 'inf_point': report.inf_point, 'lambda1': lambda1},
    )
    return report


def alpha_threshold_space_form(
    curvature_k: float, radius: float, dimension: int, lambda1: float
) -> float:
    """空間形式的閉式門檻 (N−1)/(λ₁·σ_K(R)²)。"""
    sigma = float(space_form_factor(curvature_k).derivatives(radius).sigma[0])
    return (dimension - 1) / (lambda1 * sigma * sigma)


def small_ball_threshold(dimension: int) -> float:
    """R → 0 的極限 (N−1)/λ₁(0, 1, N) = (N−1)/j²_{(N−2)/2}。"""
    if dimension < 2:
        raise DomainError(f'維度必須 ≥ 2: {dimension}')
    zero = bessel_first_zero(0.5 * (dimension - 2))
    return (dimension - 1) / (zero * zero)


def _comparison_eigenvalue(
    ball: Ball, k_max: float, tol: float, grid_size: int
) -> float:
    if k_max > 0.0 and ball.radius > convexity_radius_space_form(k_max):
        raise UnsupportedError(
            f'比較球半徑 R = {ball.radius} 超出 r_K = {convexity_radius_space_form(k_max)}'
        )
    return eigenvalue_space_form(k_max, ball.radius, ball.dimension, tol, grid_size)


def cheng_check(
    ball: Ball,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID_SIZE,
    lambda1: float | None = None,
) -> ChengReport:
    """檢查 λ₁(B(R)) ≥ λ₁(K_max, R, N)，容許 10·tol 的相對誤差。

    Raises:
        UnsupportedError: K_max > 0 且 R > r_{K_max}
    """
    _, k_max = curvature_bounds(ball)
    comparison = _comparison_eigenvalue(ball, k_max, tol, grid_size)
    value = lambda1 if lambda1 is not None else first_eigenpair(ball, tol, grid_size).lambda1
    report = ChengReport(
        holds=value >= comparison * (1.0 - 10.0 * tol),
        lambda1=value,
        comparison=comparison,
        k_max=k_max,
    )
    logger.info('Cheng 比較', extra=report.to_dict())
    return report


def threshold_curvature_estimate(
    ball: Ball,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> float:
    """以曲率上下界估計的上界 (N−1)/λ₁(K_max, R, N)·(K_max − K_min + 1/σ(R)²)。"""
    k_min, k_max = curvature_bounds(ball)
    comparison = _comparison_eigenvalue(ball, k_max, tol, grid_size)
    sigma_r = float(ball.factor.derivatives(ball.radius).sigma[0])
    if not math.isfinite(sigma_r) or sigma_r <= 0.0:
        raise DomainError(f'σ(R) 必須為正: {sigma_r}')
    return (ball.dimension - 1) / comparison * (k_max - k_min + 1.0 / (sigma_r * sigma_r))
