"""徑向 Dirichlet 問題的射擊法。

徑向化簡 v'' + (N−1)(log σ)'v' + F(v) = 0，v'(0) = v(R) = 0。
以 v(0) 為射擊變數：原點用 Taylor 起步
v(h) = v₀ − F(v₀)h²/(2N)、v'(h) = −F(v₀)h/N，之後以 RK4 向外積分至 R，
再以 brentq 求 v(R; v₀) = 0 的根。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from warp_concavity.config import DEFAULT_GRID_SIZE, DEFAULT_TOL
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.exceptions import (
    BracketError,
    ContractViolationError,
    DomainError,
    SolverFailureError,
)
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.conditions import require_convex

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Source = Callable[[float], float]

_V0_FLOOR = 1e-8
_BRACKET_CAP = 2.0**60
_LADDER_FACTOR = 10.0
# 找到變號後再多看幾階，用來偵測多重根
_LADDER_LOOKAHEAD = 2
# 極點級數中 F'(v0) 的中央差分相對步長
_SERIES_RELATIVE_STEP = 1e-4


# =============================================================================
# RK4 徑向積分
# =============================================================================


@dataclass(frozen=True)
class RadialShot:
    """單次射擊的軌跡。"""

    values: FloatArray
    slopes: FloatArray

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


class RadialIntegrator:
    """固定網格上的徑向 ODE 積分器。

    漂移係數 (N−1)(log σ)' 在節點與半步點預先計算；r = 0 從不求值。
    """

    def __init__(self, ball: Ball, grid_size: int) -> None:
        self.ball = ball
        self.grid = ball.uniform_grid(grid_size)
        self.step = float(self.grid[1])
        self.dimension = ball.dimension
        h = self.step
        nodes = self.grid[1:]
        mids = self.grid[1:-1] + 0.5 * h
        self._drift_nodes: list[float] = [0.0, *ball.drift_coefficient(nodes).tolist()]
        self._drift_mid: list[float] = [0.0, *ball.drift_coefficient(mids).tolist()]
        self._sigma3 = ball.factor.third_derivative_at_origin()

    def shoot(self, v0: float, source: Source) -> RadialShot:
        """由 v(0) = v0 積分；F 在 max(v, 0) 求值，使 v 穿越零之後仍有定義。"""

        def rhs_source(s: float) -> float:
            value = source(s if s > 0.0 else 0.0)
            if value < 0.0:
                raise ContractViolationError(f'F 必須非負，F({s}) = {value}')
            return value

        h = self.step
        half = 0.5 * h
        n = self.dimension
        f0 = rhs_source(v0)
        # F'(v0) 以中央差分估計，只進入 r⁴ 項
        eta = _SERIES_RELATIVE_STEP * v0
        df0 = (rhs_source(v0 + eta) - rhs_source(v0 - eta)) / (2.0 * eta)
        a = -f0 / (2.0 * n)
        b = -a * (df0 + 2.0 * (n - 1) * self._sigma3 / 3.0) / (4.0 * (n + 2))
        v = v0 + a * h * h + b * h**4
        p = 2.0 * a * h + 4.0 * b * h**3
        values = [v0, v]
        slopes = [0.0, p]
        drift_nodes = self._drift_nodes
        drift_mid = self._drift_mid

        for i in range(1, len(drift_nodes) - 1):
            d0 = drift_nodes[i]
            dm = drift_mid[i]
            d1 = drift_nodes[i + 1]
            k1v = p
            k1p = -d0 * p - rhs_source(v)
            p2 = p + half * k1p
            k2v = p2
            k2p = -dm * p2 - rhs_source(v + half * k1v)
            p3 = p + half * k2p
            k3v = p3
            k3p = -dm * p3 - rhs_source(v + half * k2v)
            p4 = p + h * k3p
            k4v = p4
            k4p = -d1 * p4 - rhs_source(v + h * k3v)
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            values.append(v)
            slopes.append(p)

        return RadialShot(np.asarray(values), np.asarray(slopes))


# =============================================================================
# 非線性項檢查
# =============================================================================


@dataclass(frozen=True)
class NonlinearityReport:
    """F 的可容許性：F > 0 且 s ↦ s^{α−1}F(s) 非遞增。

    Attributes:
        holds: 是否成立
        alpha: 檢查使用的 α
        worst_increase: s^{α−1}F(s) 相鄰取樣的最大相對增量（≤ 0 表示非遞增）
        worst_point: 最大增量所在的 s
        min_value: 取樣上 F 的最小值
    """

    holds: bool
    alpha: float
    worst_increase: float
    worst_point: float
    min_value: float

    def to_dict(self) -> dict[str, float | bool]:
        return {
            'holds': self.holds,
            'alpha': self.alpha,
            'worst_increase': self.worst_increase,
            'worst_point': self.worst_point,
            'min_value': self.min_value,
        }


def check_nonlinearity(
    source: Source,
    alpha: float,
    s_min: float = 1e-6,
    s_max: float = 1e6,
    samples: int = 241,
) -> NonlinearityReport:
    """在對數取樣上檢查 F > 0 且 s^{α−1}F(s) 非遞增。

    Raises:
        ContractViolationError: α 不在 [0, 1]
    """
    if not (0.0 <= alpha <= 1.0):
        raise ContractViolationError(f'α 必須位於 [0, 1]: {alpha}')
    s = np.geomspace(s_min, s_max, samples)
    f = np.array([source(float(x)) for x in s])
    g = s ** (alpha - 1.0) * f
    increase = np.diff(g) / np.maximum(np.abs(g[:-1]), np.finfo(float).tiny)
    idx = int(np.argmax(increase))
    worst = float(increase[idx])
    min_value = float(np.min(f))
    holds = min_value > 0.0 and worst <= 1e-12
    return NonlinearityReport(holds, alpha, worst, float(s[idx + 1]), min_value)


# =============================================================================
# Dirichlet 問題
# =============================================================================


def _bracket_v0(
    integrator: RadialIntegrator, source: Source
) -> tuple[float, float, float, float, int]:
    """沿 10 倍階梯尋找 v(R; v0) 的變號，回傳 (lo, hi, g_lo, g_hi, 變號次數)。"""
    lo = _V0_FLOOR
    g_lo = integrator.shoot(lo, source).terminal
    if g_lo >= 0.0:
        raise BracketError(f'v0 = {lo} 時 v(R) = {g_lo} ≥ 0，區間下界無變號')

    sign_changes = 0
    bracket: tuple[float, float, float, float] | None = None
    lookahead = _LADDER_LOOKAHEAD
    prev, g_prev = lo, g_lo
    candidate = lo * _LADDER_FACTOR
    while candidate <= _BRACKET_CAP:
        g = integrator.shoot(candidate, source).terminal
        if (g_prev < 0.0) != (g < 0.0):
            sign_changes += 1
            if bracket is None:
                bracket = (prev, candidate, g_prev, g)
        elif bracket is not None:
            lookahead -= 1
            if lookahead < 0:
                break
        prev, g_prev = candidate, g
        candidate *= _LADDER_FACTOR

    if bracket is None:
        raise BracketError(f'v0 ∈ [{lo}, {_BRACKET_CAP}] 內 v(R) 無變號')
    return (*bracket, sign_changes)


def solve_dirichlet_bvp(
    ball: Ball,
    source: Source,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID_SIZE,
    problem: str = 'dirichlet',
) -> RadialProfile:
    """以射擊法求解 −Δu = F(u)、u|∂B = 0 的徑向正解。

    Args:
        ball: 旋轉對稱球（須滿足 σ' > 0）
        source: 非線性項 F，在 (0, ∞) 上為正
        tol: 邊界殘差容許值 |v(R)| ≤ tol·v(0)
        grid_size: 網格區間數 M
        problem: 寫入 profile 的問題識別

    Returns:
        RadialProfile，shooting_parameter 為 v(0)

    Raises:
        BracketError: 射擊映射在區間內無變號
        ContractViolationError: F 出現負值
        SolverFailureError: 找到根但殘差或內部正值性不滿足
    """
    require_convex(ball)
    integrator = RadialIntegrator(ball, grid_size)
    lo, hi, g_lo, g_hi, changes = _bracket_v0(integrator, source)
    if changes > 1:
        logger.warning('射擊映射出現多個變號，取第一個根', extra={'sign_changes': changes})
    logger.debug('射擊區間', extra={'lo': lo, 'hi': hi, 'g_lo': g_lo, 'g_hi': g_hi})

    v0 = float(
        brentq(
            lambda x: integrator.shoot(x, source).terminal,
            lo,
            hi,
            xtol=1e-15 * hi,
            rtol=4.0 * np.finfo(float).eps,
            maxiter=200,
        )
    )
    shot = integrator.shoot(v0, source)
    residual = shot.terminal
    _verify_profile(shot.values, residual, v0, tol)

    logger.info('射擊法收斂', extra={'v0': v0, 'residual': residual, 'problem': problem})
    return RadialProfile(
        grid=integrator.grid,
        values=shot.values,
        ball=ball,
        problem=problem,
        residual=residual,
        shooting_parameter=v0,
        slopes=shot.slopes,
        metadata={'tol': tol, 'grid_size': grid_size, 'sign_changes': changes},
    )


def _verify_profile(values: FloatArray, residual: float, v0: float, tol: float) -> None:
    if abs(residual) > tol * v0:
        raise SolverFailureError(f'邊界殘差 {residual} 超過 tol·v(0) = {tol * v0}')
    if not np.all(values[:-1] > 0.0):
        raise SolverFailureError('解在內部網格點出現非正值')


def solve_power_bvp(
    ball: Ball,
    lam: float,
    gamma: float,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> RadialProfile:
    """求解 −Δu = λu^γ（γ ∈ [0, 1)）的徑向正解。

    Raises:
        DomainError: λ ≤ 0 或 γ 不在 [0, 1]
        ContractViolationError: γ = 1（只有 λ = λ₁ 時有解，請改用 first_eigenpair）
    """
    if not (lam > 0.0) or not math.isfinite(lam):
        raise DomainError(f'λ 必須為正: {lam}')
    if not (0.0 <= gamma <= 1.0):
        raise DomainError(f'γ 必須位於 [0, 1]: {gamma}')
    if gamma == 1.0:
        raise ContractViolationError('γ = 1 的問題只在 λ = λ₁ 時可解，請改用 first_eigenpair')

    def source(s: float) -> float:
        return lam * s**gamma

    problem = 'torsion' if gamma == 0.0 else 'power'
    profile = solve_dirichlet_bvp(ball, source, tol, grid_size, problem=problem)
    profile.metadata.update({'lambda': lam, 'gamma': gamma})
    return profile
