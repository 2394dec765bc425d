"""第一 Dirichlet 特徵對。

對 λ 射擊：v(0) = 1、v'(0) = 0，F(s) = λs。第一個零點 z(λ) 隨 λ 嚴格遞減（Sturm），
以 brentq 求 z(λ) = R。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from warp_concavity.config import DEFAULT_GRID_SIZE, DEFAULT_TOL
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.elliptic.shooting import RadialIntegrator, RadialShot
from warp_concavity.exceptions import BracketError, SolverFailureError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.conditions import require_convex
from warp_concavity.geometry.factor import space_form_factor

logger = logging.getLogger(__name__)

_LAMBDA_FLOOR = 1e-6
_LAMBDA_CAP = 2.0**60


@dataclass(frozen=True)
class EigenSolution:
    """第一特徵值與正規化特徵函數。

    Attributes:
        lambda1: λ₁(B(R))
        profile: 特徵函數，v(0) = 1
        rayleigh: Rayleigh 商 ∫v'²σ^{N−1} / ∫v²σ^{N−1}
        history: 射擊過程的 (λ, z(λ)) 紀錄
    """

    lambda1: float
    profile: RadialProfile
    rayleigh: float
    history: list[tuple[float, float]] = field(default_factory=lambda: [])

    @property
    def rayleigh_gap(self) -> float:
        return abs(self.rayleigh - self.lambda1) / self.lambda1

    @property
    def sturm_monotone(self) -> bool:
        """z(λ) 在射擊紀錄中是否嚴格遞減。"""
        ordered = sorted(dict(self.history).items())
        zs = [z for _, z in ordered]
        return all(b < a for a, b in zip(zs, zs[1:], strict=False))

    def to_dict(self) -> dict[str, Any]:
        return {
            'lambda1': self.lambda1,
            'rayleigh': self.rayleigh,
            'rayleigh_gap': self.rayleigh_gap,
            'sturm_monotone': self.sturm_monotone,
            'profile': self.profile.to_dict(),
        }


def _first_zero(integrator: RadialIntegrator, shot: RadialShot) -> float:
    """第一個零點 z(λ)。

    網格內有變號時以 Hermite 插值定位；沒有時以 R − v(R)/v'(R) 外插，
    使 z 在 z = R 附近連續。v'(R) ≥ 0 時回傳 2R + v(R)（遠大於 R）。
    """
    values = shot.values
    grid = integrator.grid
    negative = np.flatnonzero(values <= 0.0)
    if negative.size:
        k = int(negative[0])
        if values[k] == 0.0:
            return float(grid[k])
        window = slice(k - 1, k + 1)
        spline = CubicHermiteSpline(grid[window], values[window], shot.slopes[window])
        return float(brentq(lambda r: float(spline(r)), grid[k - 1], grid[k], xtol=1e-15))
    v_r = float(values[-1])
    slope = float(shot.slopes[-1])
    radius = float(grid[-1])
    if slope < 0.0:
        return radius - v_r / slope
    return 2.0 * radius + v_r


def first_eigenpair(
    ball: Ball,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> EigenSolution:
    """以 λ 射擊求 B(R) 的第一 Dirichlet 特徵對。

    Args:
        ball: 旋轉對稱球
        tol: |z(λ) − R| ≤ tol·R
        grid_size: 網格區間數 M

    Raises:
        BracketError: λ 上界加倍至 2⁶⁰ 仍無變號
        SolverFailureError: 根不滿足容許值
    """
    require_convex(ball)
    integrator = RadialIntegrator(ball, grid_size)
    radius = ball.radius
    history: list[tuple[float, float]] = []

    def mismatch(lam: float) -> float:
        shot = integrator.shoot(1.0, lambda s: lam * s)
        z = _first_zero(integrator, shot)
        history.append((lam, z))
        return z - radius

    lo = _LAMBDA_FLOOR
    if mismatch(lo) <= 0.0:
        raise BracketError(f'λ = {lo} 時第一零點已在 R 之內')
    hi = 1.0 / (radius * radius)
    while mismatch(hi) > 0.0:
        lo = hi
        hi *= 2.0
        if hi > _LAMBDA_CAP:
            raise BracketError(f'λ 上界超過 {_LAMBDA_CAP} 仍無變號')

    lam = float(brentq(mismatch, lo, hi, xtol=1e-15 * hi, rtol=4.0 * np.finfo(float).eps))
    shot = integrator.shoot(1.0, lambda s: lam * s)
    z = _first_zero(integrator, shot)
    if abs(z - radius) > tol * radius:
        raise SolverFailureError(f'特徵值射擊未達容許值：|z − R| = {abs(z - radius)}')
    if not np.all(shot.values[:-1] > 0.0):
        raise SolverFailureError('特徵函數在內部出現非正值')

    profile = RadialProfile(
        grid=integrator.grid,
        values=shot.values,
        ball=ball,
        problem='eigen',
        residual=shot.terminal,
        shooting_parameter=lam,
        slopes=shot.slopes,
        metadata={'tol': tol, 'grid_size': grid_size, 'lambda1': lam},
    )
    solution = EigenSolution(lam, profile, _rayleigh_quotient(profile), history)
    if not solution.sturm_monotone:
        logger.warning('射擊紀錄中 z(λ) 不是嚴格遞減', extra={'evaluations': len(history)})
    logger.info(
        '第一特徵值收斂',
        extra={
            'lambda1': lam,
            'rayleigh_gap': solution.rayleigh_gap,
            'evaluations': len(history),
        },
    )
    return solution


def _rayleigh_quotient(profile: RadialProfile) -> float:
    grid = profile.grid
    weight = np.zeros_like(grid)
    sigma = profile.ball.factor.derivatives(grid[1:]).sigma
    weight[1:] = sigma ** (profile.ball.dimension - 1)
    slopes = profile.slopes if profile.slopes is not None else profile.first_derivative
    numerator = simpson(slopes * slopes * weight, x=grid)
    denominator = simpson(profile.values * profile.values * weight, x=grid)
    return float(numerator / denominator)


@lru_cache(maxsize=256)
def eigenvalue_space_form(
    curvature_k: float,
    radius: float,
    dimension: int,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> float:
    """空間形式球的 λ₁(K, R, N)。

    Raises:
        DomainError: K > 0 且 R > r_K
    """
    ball = Ball(dimension, radius, space_form_factor(curvature_k))
    return first_eigenpair(ball, tol, grid_size).lambda1
