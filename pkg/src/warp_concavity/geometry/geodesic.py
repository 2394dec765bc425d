"""二維彎曲截面上的測地線積分與兩點連接。

旋轉對稱使測地線落在過球心的二維截面內。積分在截面的法座標
x = a·(cos φ, sin φ) 中進行，方程式

    ẍ = A(a)·(x×v)²/a²·x + 2B(a)·(x·v)(x×v)/a²·Jx
    A(a) = (σσ' − a)/a³,  B(a) = (1 − aσ'/σ)/a²

在 a > 0 時與極座標方程 a'' = (φ')²σσ'、φ'' = −2(σ'/σ)a'φ' 完全等價，
且在極點 o 仍然正則；通過極點的曲線自動維持為徑向直線。
a 很小時 A、B 改用 Taylor 極限 A(0) = 2σ'''(0)/3、B(0) = −σ'''(0)/3。

所有積分皆為批次向量化的固定步長 RK4，多條曲線同步推進。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import CubicHermiteSpline

from warp_concavity.config import GeometrySettings
from warp_concavity.exceptions import DomainError, SolverFailureError
from warp_concavity.geometry.ball import Ball

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
PolarPoint = tuple[float, float]

# 小於 _POLE_FRACTION·R 的半徑視為極點附近，改用 Taylor 係數
_POLE_FRACTION = 1e-4
# 角度差小於此值時視為同一射線或對徑，直接給出徑向解
_RADIAL_ANGLE_EPS = 1e-14
_MAX_REFINE_ITERATIONS = 100
_MAX_RESOLUTION_RETRIES = 3


# =============================================================================
# Geodesic
# =============================================================================


@dataclass(frozen=True, eq=False)
class Geodesic:
    """積分完成的測地線 c(t) = (a(t), φ(t))，t ∈ [0, 1]。

    Attributes:
        t: 仿射參數取樣
        a: 半徑 a(t)
        phi: 角度 φ(t)（連續展開；通過極點時跳 π）
        da: a'(t)
        dphi: φ'(t)
        length: 弧長（速度為常數 length）
        clairaut: 起點的 Clairaut 常數 σ(a)²φ'
        start: 起點 (半徑, 角度)
        end: 終點 (半徑, 角度)
        truncated: 是否在達到要求長度前離開 B(R)
        exit_parameter: 離開 B(R) 時的參數 t（未截斷為 None）
    """

    t: FloatArray
    a: FloatArray
    phi: FloatArray
    da: FloatArray
    dphi: FloatArray
    length: float
    clairaut: float
    start: PolarPoint
    end: PolarPoint
    truncated: bool = False
    exit_parameter: float | None = None
    _chart: FloatArray = field(default_factory=lambda: np.zeros((0, 4)), repr=False)
    _energy: FloatArray = field(default_factory=lambda: np.zeros(0), repr=False)
    _clairaut_values: FloatArray = field(default_factory=lambda: np.zeros(0), repr=False)

    # --- 守恆量 ---

    @property
    def energy(self) -> FloatArray:
        """g(c', c') = (a')² + σ(a)²(φ')² 的取樣值。"""
        return self._energy

    @property
    def clairaut_values(self) -> FloatArray:
        """σ(a)²φ' 的取樣值。"""
        return self._clairaut_values

    @property
    def speed_drift(self) -> float:
        """速度平方的最大相對漂移。"""
        if self._energy.size == 0:
            return 0.0
        ref = float(self._energy[0])
        return float(np.max(np.abs(self._energy - ref))) / max(ref, np.finfo(float).tiny)

    @property
    def clairaut_drift(self) -> float:
        """Clairaut 常數的最大相對漂移（以 length·R 量級為下限）。"""
        if self._clairaut_values.size == 0:
            return 0.0
        ref = float(self._clairaut_values[0])
        scale = max(abs(ref), 1e-12 * max(self.length, 1e-300))
        return float(np.max(np.abs(self._clairaut_values - ref))) / scale

    @property
    def min_radius(self) -> float:
        """曲線上取樣到的最小半徑。"""
        return float(np.min(self.a))

    def samples(self) -> list[tuple[float, float, float, float, float]]:
        """(t, a, φ, a', φ') 取樣列表。"""
        return [
            (float(t), float(a), float(p), float(da), float(dp))
            for t, a, p, da, dp in zip(self.t, self.a, self.phi, self.da, self.dphi, strict=True)
        ]

    def radius_at(self, params: FloatArray) -> FloatArray:
        """以法座標的三次 Hermite 插值計算 ρ(c(t))，通過極點時仍然光滑。"""
        chart = self._chart
        spline_x = CubicHermiteSpline(self.t, chart[:, 0], chart[:, 2])
        spline_y = CubicHermiteSpline(self.t, chart[:, 1], chart[:, 3])
        return np.hypot(spline_x(params), spline_y(params))

    def pole_parameter(self, threshold: float) -> float | None:
        """若曲線經過極點（半徑 < threshold），回傳最接近極點的參數 t₀。"""
        idx = int(np.argmin(self.a))
        if float(self.a[idx]) < threshold:
            return float(self.t[idx])
        return None

    def to_dict(self) -> dict[str, Any]:
        """摘要（不含取樣陣列）。"""
        return {
            'length': self.length,
            'clairaut': self.clairaut,
            'start': list(self.start),
            'end': list(self.end),
            'truncated': self.truncated,
            'exit_parameter': self.exit_parameter,
            'speed_drift': self.speed_drift,
            'clairaut_drift': self.clairaut_drift,
        }


# =============================================================================
# 法座標積分器
# =============================================================================


class _ChartIntegrator:
    """截面法座標中的批次 RK4 積分器。

    狀態陣列形狀為 (4, batch)：(x, y, vx, vy)。
    """

    def __init__(self, ball: Ball) -> None:
        self._ball = ball
        self._factor = ball.factor
        tau = ball.factor.third_derivative_at_origin()
        self._tau = tau
        self._a0 = 2.0 * tau / 3.0
        self._b0 = -tau / 3.0
        self._a_small = _POLE_FRACTION * ball.radius

    @property
    def radius(self) -> float:
        return self._ball.radius

    # --- 係數 ---

    def coefficients(self, a: FloatArray) -> tuple[FloatArray, FloatArray]:
        a_safe = np.maximum(a, self._a_small)
        s, s1, _, _ = self._factor.unsafe_derivatives(a_safe)
        coef_a = (s * s1 - a_safe) / a_safe**3
        coef_b = (1.0 - a_safe * s1 / s) / (a_safe * a_safe)
        small = a < self._a_small
        return np.where(small, self._a0, coef_a), np.where(small, self._b0, coef_b)

    def ratio_squared_minus_one(self, a: FloatArray) -> FloatArray:
        """(σ(a)/a)² − 1，a 很小時用 σ'''(0)a²/3。"""
        a_safe = np.maximum(a, self._a_small)
        s = self._factor.unsafe_derivatives(a_safe).sigma
        exact = (s / a_safe) ** 2 - 1.0
        return np.where(a < self._a_small, self._tau * a * a / 3.0, exact)

    def ratio(self, a: FloatArray) -> FloatArray:
        """σ(a)/a，極點處為 1。"""
        return np.sqrt(1.0 + self.ratio_squared_minus_one(a))

    # --- 向量場 ---

    def rhs(self, state: FloatArray) -> FloatArray:
        x, y, vx, vy = state
        a2 = x * x + y * y
        a = np.sqrt(a2)
        cross = x * vy - y * vx
        dot = x * vx + y * vy
        inv_a2 = np.where(a2 > 0.0, 1.0 / np.where(a2 > 0.0, a2, 1.0), 0.0)
        coef_a, coef_b = self.coefficients(a)
        radial = coef_a * cross * cross * inv_a2
        angular = 2.0 * coef_b * dot * cross * inv_a2
        return np.stack([vx, vy, radial * x - angular * y, radial * y + angular * x])

    def step(self, state: FloatArray, h: float) -> FloatArray:
        k1 = self.rhs(state)
        k2 = self.rhs(state + 0.5 * h * k1)
        k3 = self.rhs(state + 0.5 * h * k2)
        k4 = self.rhs(state + h * k3)
        return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def trajectory(self, state0: FloatArray, h: float, steps: int) -> FloatArray:
        """完整軌跡，形狀 (steps+1, 4, batch)；離開球外的曲線就地凍結。"""
        limit = self._ball.radius * (1.0 + 1e-12)
        out = np.empty((steps + 1, *state0.shape))
        out[0] = state0
        state = state0
        active = np.ones(state0.shape[1], dtype=bool)
        with np.errstate(all='ignore'):
            for k in range(steps):
                nxt = self.step(state, h)
                state = np.where(active, nxt, state)
                out[k + 1] = state
                active &= np.hypot(state[0], state[1]) <= limit
        return out

    # --- 量測 ---

    def energy(self, chart: FloatArray) -> FloatArray:
        """chart 形狀 (n, 4)，回傳 g(v, v)。"""
        x, y, vx, vy = chart.T
        a2 = x * x + y * y
        cross = x * vy - y * vx
        ratio_term = np.where(a2 > 0.0, cross * cross / np.where(a2 > 0.0, a2, 1.0), 0.0)
        return vx * vx + vy * vy + self.ratio_squared_minus_one(np.sqrt(a2)) * ratio_term

    def clairaut(self, chart: FloatArray) -> FloatArray:
        """σ(a)²φ' = (σ/a)²·(x×v)。"""
        x, y, vx, vy = chart.T
        a = np.hypot(x, y)
        return (1.0 + self.ratio_squared_minus_one(a)) * (x * vy - y * vx)


# =============================================================================
# 軌跡轉換
# =============================================================================


def _polar_from_chart(chart: FloatArray, start_angle: float) -> tuple[FloatArray, ...]:
    x, y, vx, vy = chart.T
    a = np.hypot(x, y)
    at_pole = a == 0.0
    raw = np.arctan2(y, x)
    if at_pole[0]:
        raw[0] = start_angle
    # 極點上角度無定義，沿用前一個值
    for i in np.flatnonzero(at_pole):
        if i > 0:
            raw[i] = raw[i - 1]
    phi = np.unwrap(raw)
    phi = phi + (start_angle - phi[0])
    safe = np.where(at_pole, 1.0, a)
    speed = np.hypot(vx, vy)
    da = np.where(at_pole, speed, (x * vx + y * vy) / safe)
    dphi = np.where(at_pole, 0.0, (x * vy - y * vx) / (safe * safe))
    return a, phi, da, dphi


def _build_geodesic(
    integrator: _ChartIntegrator,
    chart: FloatArray,
    length: float,
    start_angle: float,
    radius: float,
) -> Geodesic:
    """由單條軌跡 (n, 4) 建立 Geodesic，處理離開球外的截斷。"""
    steps = chart.shape[0] - 1
    t = np.linspace(0.0, 1.0, steps + 1)
    radii = np.hypot(chart[:, 0], chart[:, 1])
    outside = np.flatnonzero(radii > radius * (1.0 + 1e-12))
    truncated = outside.size > 0
    exit_parameter: float | None = None
    if truncated:
        k = int(outside[0])
        r0, r1 = float(radii[k - 1]), float(radii[k])
        frac = (radius - r0) / (r1 - r0) if r1 != r0 else 1.0
        exit_parameter = float(t[k - 1] + frac * (t[k] - t[k - 1]))
        chart = chart[:k]
        t = t[:k]

    a, phi, da, dphi = _polar_from_chart(chart, start_angle)
    clairaut_values = integrator.clairaut(chart)
    return Geodesic(
        t=t,
        a=a,
        phi=phi,
        da=da,
        dphi=dphi,
        length=length,
        clairaut=float(clairaut_values[0]),
        start=(float(a[0]), float(phi[0])),
        end=(float(a[-1]), float(phi[-1])),
        truncated=truncated,
        exit_parameter=exit_parameter,
        _chart=chart,
        _energy=integrator.energy(chart),
        _clairaut_values=clairaut_values,
    )


def _initial_chart_state(
    integrator: _ChartIntegrator,
    start: PolarPoint,
    direction: tuple[float, float],
    length: float,
) -> FloatArray:
    radius, angle = start
    radial_speed, angular_speed = direction
    e_r = np.array([math.cos(angle), math.sin(angle)])
    e_phi = np.array([-math.sin(angle), math.cos(angle)])
    if radius == 0.0:
        # 極點出發一律徑向；徑向速度為負時沿反方向射出
        sign = -1.0 if radial_speed < 0.0 else 1.0
        velocity = sign * e_r * length
    else:
        sigma = float(integrator.ratio(np.array([radius]))[0]) * radius
        norm = math.hypot(radial_speed, sigma * angular_speed)
        scale = length / norm
        velocity = scale * (radial_speed * e_r + radius * angular_speed * e_phi)
    position = radius * e_r
    return np.array([position[0], position[1], velocity[0], velocity[1]])


# =============================================================================
# 公開操作
# =============================================================================


def integrate_geodesic(
    ball: Ball,
    start: PolarPoint,
    direction: tuple[float, float],
    length: float,
    steps: int | None = None,
) -> Geodesic:
    """從 start 沿 direction 積分長度為 length 的測地線。

    direction 為 (a'(0), φ'(0))，會被正規化為 g-範數 length，使 t ∈ [0, 1]。
    極點出發時曲線一律徑向射出。

    Args:
        ball: 旋轉對稱球
        start: 起點 (半徑, 角度)，半徑 ∈ [0, R)
        direction: (徑向速度, 角速度)，不可為零
        length: 曲線長度 > 0
        steps: RK4 步數，預設 4096

    Returns:
        Geodesic；若提前離開 B(R)，truncated 為 True 並記錄 exit_parameter

    Raises:
        DomainError: 起點不在球內、方向為零或長度非正
    """
    n_steps = steps if steps is not None else GeometrySettings().geodesic_steps
    if n_steps < 8:
        raise DomainError(f'步數至少為 8: {n_steps}')
    if not (0.0 <= start[0] < ball.radius):
        raise DomainError(f'起點半徑必須位於 [0, R): {start[0]}')
    if direction[0] == 0.0 and direction[1] == 0.0:
        raise DomainError('方向向量不可為零')
    if not (length > 0.0):
        raise DomainError(f'長度必須為正: {length}')

    integrator = _ChartIntegrator(ball)
    state0 = _initial_chart_state(integrator, start, direction, length)[:, None]
    chart = integrator.trajectory(state0, 1.0 / n_steps, n_steps)[:, :, 0]
    geodesic = _build_geodesic(integrator, chart, length, start[1], ball.radius)
    if geodesic.truncated:
        logger.info('測地線離開球外，已截斷', extra={'exit_parameter': geodesic.exit_parameter})
    return geodesic


# --- 兩點連接 ---


@dataclass
class _ShootingProblem:
    """正規化後的批次射擊問題：p 在 (r_p, 0)，q 在角度 Δ ∈ (0, π) 的射線上。"""

    r_p: FloatArray
    r_q: FloatArray
    delta: FloatArray
    ratio_p: FloatArray


def _shoot(
    integrator: _ChartIntegrator,
    problem: _ShootingProblem,
    theta: FloatArray,
    steps: int,
    max_length: float,
) -> tuple[FloatArray, FloatArray]:
    """以單位速度射出，回傳 (穿越 q 射線時的半徑 − r_q, 穿越時的弧長)。

    先離開球外者記為 +inf。
    """
    batch = theta.shape[0]
    h = max_length / steps
    sin_d = np.sin(problem.delta)
    cos_d = np.cos(problem.delta)
    state = np.stack(
        [
            problem.r_p,
            np.zeros(batch),
            np.cos(theta),
            np.sin(theta) / problem.ratio_p,
        ]
    )
    mismatch = np.full(batch, np.inf)
    arc = np.full(batch, np.nan)
    active = np.ones(batch, dtype=bool)
    limit = _exit_radius(integrator)
    side = state[0] * sin_d - state[1] * cos_d

    with np.errstate(all='ignore'):
        for k in range(steps):
            if not active.any():
                break
            nxt = integrator.step(state, h)
            new_side = nxt[0] * sin_d - nxt[1] * cos_d
            crossed = active & (side > 0.0) & (new_side <= 0.0)
            if crossed.any():
                idx = np.flatnonzero(crossed)
                tau = _hermite_root(
                    state[:, idx], nxt[:, idx], h, sin_d[idx], cos_d[idx], side[idx], new_side[idx]
                )
                px, py = _hermite_position(state[:, idx], nxt[:, idx], h, tau)
                mismatch[idx] = np.hypot(px, py) - problem.r_q[idx]
                arc[idx] = (k + tau) * h
                active[idx] = False
            exited = active & (np.hypot(nxt[0], nxt[1]) > limit)
            active &= ~exited
            state = np.where(active, nxt, state)
            side = np.where(active, new_side, side)
    return mismatch, arc


def _exit_radius(integrator: _ChartIntegrator) -> float:
    """射擊時判定離開球外的半徑。"""
    return integrator.radius * (1.0 + 1e-12)


def _hermite_position(
    s0: FloatArray, s1: FloatArray, h: float, tau: FloatArray
) -> tuple[FloatArray, FloatArray]:
    t2 = tau * tau
    t3 = t2 * tau
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + tau
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    px = h00 * s0[0] + h10 * h * s0[2] + h01 * s1[0] + h11 * h * s1[2]
    py = h00 * s0[1] + h10 * h * s0[3] + h01 * s1[1] + h11 * h * s1[3]
    return px, py


def _hermite_root(
    s0: FloatArray,
    s1: FloatArray,
    h: float,
    sin_d: FloatArray,
    cos_d: FloatArray,
    g0: FloatArray,
    g1: FloatArray,
) -> FloatArray:
    """在單一步內以 Newton 法求 Hermite 插值曲線與 q 射線的交點參數 τ ∈ [0, 1]。"""
    tau = np.clip(g0 / (g0 - g1), 0.0, 1.0)
    for _ in range(8):
        t2 = tau * tau
        px, py = _hermite_position(s0, s1, h, tau)
        g = px * sin_d - py * cos_d
        d00 = 6.0 * t2 - 6.0 * tau
        d10 = 3.0 * t2 - 4.0 * tau + 1.0
        d01 = -6.0 * t2 + 6.0 * tau
        d11 = 3.0 * t2 - 2.0 * tau
        dx = d00 * s0[0] + d10 * h * s0[2] + d01 * s1[0] + d11 * h * s1[2]
        dy = d00 * s0[1] + d10 * h * s0[3] + d01 * s1[1] + d11 * h * s1[3]
        dg = dx * sin_d - dy * cos_d
        step = np.where(dg != 0.0, g / np.where(dg != 0.0, dg, 1.0), 0.0)
        tau = np.clip(tau - step, 0.0, 1.0)
    return tau


def _refine_launch_angles(
    integrator: _ChartIntegrator,
    problem: _ShootingProblem,
    angles: int,
    steps: int,
    max_length: float,
    tol: float,
) -> tuple[FloatArray, FloatArray]:
    """粗掃描 + Illinois 區間法求每一對的發射角，回傳 (θ*, 弧長)。"""
    n = problem.r_p.shape[0]

    # 粗掃描：每對 angles 個發射角同步積分
    grid = (np.arange(angles) + 0.5) * math.pi / angles
    theta_all = np.tile(grid, n)
    expanded = _ShootingProblem(
        r_p=np.repeat(problem.r_p, angles),
        r_q=np.repeat(problem.r_q, angles),
        delta=np.repeat(problem.delta, angles),
        ratio_p=np.repeat(problem.ratio_p, angles),
    )
    coarse, _ = _shoot(integrator, expanded, theta_all, steps, max_length)
    coarse = coarse.reshape(n, angles)

    lo = np.zeros(n)
    hi = np.full(n, math.pi)
    f_lo = np.full(n, np.inf)
    f_hi = -problem.r_q.copy()
    for i in range(n):
        negative = np.flatnonzero(coarse[i] <= 0.0)
        if negative.size == 0:
            lo[i] = grid[-1]
            f_lo[i] = coarse[i, -1]
            continue
        k = int(negative[0])
        hi[i], f_hi[i] = grid[k], coarse[i, k]
        if k > 0:
            lo[i], f_lo[i] = grid[k - 1], coarse[i, k - 1]

    theta = 0.5 * (lo + hi)
    arc = np.full(n, np.nan)
    done = np.zeros(n, dtype=bool)
    side_flag = np.zeros(n, dtype=np.int8)
    for iteration in range(_MAX_REFINE_ITERATIONS):
        # Illinois：兩端皆有限時用割線，否則二分
        finite = np.isfinite(f_lo) & np.isfinite(f_hi) & (f_lo != f_hi)
        secant = np.where(
            finite,
            hi - f_hi * (hi - lo) / np.where(finite, f_hi - f_lo, 1.0),
            0.5 * (lo + hi),
        )
        inside = (secant > lo) & (secant < hi)
        theta = np.where(done, theta, np.where(inside, secant, 0.5 * (lo + hi)))
        todo = np.flatnonzero(~done)
        sub = _ShootingProblem(
            r_p=problem.r_p[todo],
            r_q=problem.r_q[todo],
            delta=problem.delta[todo],
            ratio_p=problem.ratio_p[todo],
        )
        f_mid, arc_mid = _shoot(integrator, sub, theta[todo], steps, max_length)
        arc[todo] = arc_mid

        converged = (np.abs(f_mid) <= tol) | ((hi[todo] - lo[todo]) <= 1e-15)
        upper = f_mid > 0.0
        for j, i in enumerate(todo):
            if converged[j] and np.isfinite(arc_mid[j]):
                done[i] = True
                continue
            if upper[j]:
                lo[i], f_lo[i] = theta[i], f_mid[j]
                if side_flag[i] == 1:
                    f_hi[i] *= 0.5
                side_flag[i] = 1
            else:
                hi[i], f_hi[i] = theta[i], f_mid[j]
                if side_flag[i] == -1 and np.isfinite(f_lo[i]):
                    f_lo[i] *= 0.5
                side_flag[i] = -1
        if done.all():
            logger.debug('發射角收斂', extra={'iterations': iteration + 1, 'pairs': n})
            return theta, arc

    raise SolverFailureError(
        f'測地線射擊未收斂：{int((~done).sum())} 對在 {_MAX_REFINE_ITERATIONS} 次迭代後仍未收斂'
    )


def _radial_connection(
    ball: Ball, p: PolarPoint, q: PolarPoint, through_pole: bool, steps: int
) -> Geodesic:
    """同一射線、含極點或對徑的端點：測地線為徑向線段。"""
    r_p, phi_p = p
    r_q, phi_q = q
    if through_pole:
        length = r_p + r_q
        return integrate_geodesic(ball, p, (-1.0, 0.0), length, steps)
    if r_p == 0.0:
        return integrate_geodesic(ball, (0.0, phi_q), (1.0, 0.0), r_q, steps)
    sign = 1.0 if r_q > r_p else -1.0
    length = abs(r_q - r_p)
    return integrate_geodesic(ball, (r_p, phi_p), (sign, 0.0), length, steps)


def _metric_gap(integrator: _ChartIntegrator, geodesic: Geodesic, q: PolarPoint) -> float:
    """終點與 q 在 q 點度量下的距離（一階近似）。"""
    end_x = geodesic._chart[-1, :2]  # pyright: ignore[reportPrivateUsage]
    r_q, phi_q = q
    target = np.array([r_q * math.cos(phi_q), r_q * math.sin(phi_q)])
    delta = end_x - target
    if r_q == 0.0:
        return float(np.hypot(*delta))
    e_r = target / r_q
    e_phi = np.array([-e_r[1], e_r[0]])
    ratio = float(integrator.ratio(np.array([r_q]))[0])
    return math.hypot(float(delta @ e_r), ratio * float(delta @ e_phi))


def connect_geodesics(
    ball: Ball,
    pairs: Sequence[tuple[PolarPoint, PolarPoint]],
    tol: float = 1e-8,
    settings: GeometrySettings | None = None,
) -> list[Geodesic]:
    """以批次射擊法連接多對端點，回傳每對的最短測地線（參數化至 [0, 1]）。

    每對先正規化為 p = (r_p, 0)、q 位於角度 Δ ∈ (0, π) 的射線上（必要時鏡射），
    發射角 θ ∈ (0, π) 自外向徑向量起算；q 射線的穿越半徑隨 θ 單調遞減。

    Args:
        ball: 強凸旋轉對稱球
        pairs: (p, q) 端點對，皆為 (半徑, 角度)
        tol: 終點與 q 的度量距離容許值
        settings: 射擊步數、粗掃描角數等設定

    Raises:
        DomainError: 端點重合或不在球內
        SolverFailureError: 射擊未收斂
    """
    cfg = settings or GeometrySettings()
    integrator = _ChartIntegrator(ball)
    results: list[Geodesic | None] = [None] * len(pairs)

    general: list[int] = []
    orient: list[float] = []
    deltas: list[float] = []
    for i, (p, q) in enumerate(pairs):
        for point in (p, q):
            if not (0.0 <= point[0] < ball.radius):
                raise DomainError(f'端點必須位於 B(R) 內: {point}')
        delta = (q[1] - p[1]) % (2.0 * math.pi)
        sign = 1.0
        if delta > math.pi:
            delta = 2.0 * math.pi - delta
            sign = -1.0
        same_ray = delta < _RADIAL_ANGLE_EPS
        antipodal = abs(delta - math.pi) < _RADIAL_ANGLE_EPS
        if (p[0] == q[0] and same_ray) or (p[0] == 0.0 and q[0] == 0.0):
            raise DomainError(f'端點重合: {p}, {q}')
        if p[0] == 0.0 or q[0] == 0.0 or same_ray or antipodal:
            through = antipodal and p[0] > 0.0 and q[0] > 0.0
            results[i] = _radial_connection(ball, p, q, through, cfg.geodesic_steps)
            continue
        general.append(i)
        orient.append(sign)
        deltas.append(delta)

    if general:
        r_p = np.array([pairs[i][0][0] for i in general])
        problem = _ShootingProblem(
            r_p=r_p,
            r_q=np.array([pairs[i][1][0] for i in general]),
            delta=np.array(deltas),
            ratio_p=integrator.ratio(r_p),
        )
        max_length = 2.05 * ball.radius
        shooting_steps = cfg.shooting_steps
        pending = np.arange(len(general))
        for attempt in range(_MAX_RESOLUTION_RETRIES + 1):
            sub = _ShootingProblem(
                r_p=problem.r_p[pending],
                r_q=problem.r_q[pending],
                delta=problem.delta[pending],
                ratio_p=problem.ratio_p[pending],
            )
            theta, arc = _refine_launch_angles(
                integrator, sub, cfg.coarse_angles, shooting_steps, max_length, 0.1 * tol
            )
            geodesics = _final_geodesics(
                integrator, ball, [pairs[general[j]][0] for j in pending],
                theta, arc, np.array([orient[j] for j in pending]), problem.ratio_p[pending],
                cfg.geodesic_steps,
            )
            still: list[int] = []
            for k, j in enumerate(pending):
                q = pairs[general[j]][1]
                gap = _metric_gap(integrator, geodesics[k], q)
                if gap <= tol:
                    results[general[j]] = geodesics[k]
                else:
                    still.append(int(j))
            if not still:
                break
            logger.info(
                '測地線終點誤差超過容許值，提高射擊解析度',
                extra={'pending': len(still), 'shooting_steps': shooting_steps},
            )
            pending = np.array(still)
            shooting_steps *= 4
            if attempt == _MAX_RESOLUTION_RETRIES:
                raise SolverFailureError(f'測地線連接失敗：{len(still)} 對無法達到容許值 {tol}')

    final = [g for g in results if g is not None]
    if len(final) != len(pairs):
        raise SolverFailureError('測地線連接結果不完整')
    return final


def _final_geodesics(
    integrator: _ChartIntegrator,
    ball: Ball,
    starts: list[PolarPoint],
    theta: FloatArray,
    arc: FloatArray,
    orient: FloatArray,
    ratio_p: FloatArray,
    steps: int,
) -> list[Geodesic]:
    """在原座標中以完整步數重新積分收斂後的發射角。"""
    angles = np.array([s[1] for s in starts])
    radii = np.array([s[0] for s in starts])
    cos_a, sin_a = np.cos(angles), np.sin(angles)
    # 正規化座標中的單位速度 (cos θ, sin θ/(σ/a))，乘上弧長並旋轉回原座標
    u_r = np.cos(theta) * arc
    u_phi = orient * np.sin(theta) / ratio_p * arc
    state0 = np.stack(
        [
            radii * cos_a,
            radii * sin_a,
            u_r * cos_a - u_phi * sin_a,
            u_r * sin_a + u_phi * cos_a,
        ]
    )
    traj = integrator.trajectory(state0, 1.0 / steps, steps)
    return [
        _build_geodesic(integrator, traj[:, :, k], float(arc[k]), starts[k][1], ball.radius)
        for k in range(theta.shape[0])
    ]


def connect_geodesic(
    ball: Ball,
    p: PolarPoint,
    q: PolarPoint,
    tol: float = 1e-8,
    settings: GeometrySettings | None = None,
) -> Geodesic:
    """連接 p 與 q 的最短測地線；length 即為 d(p, q)。

    Raises:
        DomainError: p = q 或端點不在球內
        SolverFailureError: 射擊未收斂（幾何可能違反強凸性或 tol 過嚴）
    """
    return connect_geodesics(ball, [(p, q)], tol, settings)[0]
