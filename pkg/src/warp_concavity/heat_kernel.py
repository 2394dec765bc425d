"""空間形式 M^N_K（K ≤ 0）上的熱核。

所有計算都在對數空間進行：
- K = 0：Gaussian
- K = −1、N = 3：閉式解 (4πt)^{−3/2}·ρ/sinh ρ·e^{−t−ρ²/4t}
- K = −1、N = 2：一維積分表示，代換 s = ρ + u² 消去端點奇異性後以 quad 計算
- K = −1、N ≥ 4：維度遞迴 Γ_{N+2} = −e^{−Nt}/(2π sinh ρ)·∂_ρ Γ_N；
  N = 5 由 N = 3 解析微分，其餘以 Richardson 中央差分
- 一般 K < 0：Γ_K(ρ, t) = k^{N/2}·Γ_{−1}(√k·ρ, k·t)，k = −K
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_function

from warp_concavity.concavity import ConcavityCertificate, combine_verdicts, sample_endpoint_pairs
from warp_concavity.config import DEFAULT_N_PAIRS, DEFAULT_N_PARAMS, DEFAULT_SEED
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.exceptions import DomainError, UnsupportedError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.factor import space_form_factor
from warp_concavity.parabolic import Nonlinearity, evolve
from warp_concavity.types import GeodesicGap, Verdict

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

_MAX_DIMENSION = 7
_QUAD_EPSREL = 1e-12
# Richardson 差分步長與小 ρ 改用 ρ² 二次擬合的門檻
_DIFF_STEP = 1e-2
_SMALL_RHO = 5e-2
_SERIES_RHO = 1e-3
_TAIL_LOG = 60.0
_KERNEL_EPSILON = 1e-8
_KERNEL_GRID = 512


# =============================================================================
# KernelSpec
# =============================================================================


@dataclass(frozen=True)
class KernelSpec:
    """熱核 Γ(·, o, t) on M^N_K。"""

    dimension: int
    curvature: float
    t: float

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise DomainError(f'維度必須 ≥ 2: {self.dimension}')
        if self.curvature > 0.0:
            raise DomainError(f'熱核只支援 K ≤ 0: {self.curvature}')
        if not (self.t > 0.0):
            raise DomainError(f't 必須為正: {self.t}')
        if self.curvature < 0.0 and self.dimension > _MAX_DIMENSION:
            raise UnsupportedError(f'K < 0 的熱核只支援 N ≤ {_MAX_DIMENSION}')

    @property
    def closed_form(self) -> bool:
        """是否不經數值積分即可求值。"""
        return self.curvature == 0.0 or self.dimension in (3, 5)

    def ball(self, radius: float) -> Ball:
        return Ball(self.dimension, radius, space_form_factor(self.curvature))

    def to_dict(self) -> dict[str, float | int]:
        return {'N': self.dimension, 'K': self.curvature, 't': self.t}


# =============================================================================
# 單位曲率 K = −1 的對數熱核
# =============================================================================


def _log_sinh(x: FloatArray) -> FloatArray:
    """log sinh x（x ≥ 0），大 x 不溢位。"""
    x = np.asarray(x, dtype=np.float64)
    out = np.full_like(x, -np.inf)
    big = x > 20.0
    mid = (x > 0.0) & ~big
    out[big] = x[big] - math.log(2.0) + np.log1p(-np.exp(-2.0 * x[big]))
    out[mid] = np.log(np.sinh(x[mid]))
    return out


def _log_sinh_scalar(x: float) -> float:
    if x > 20.0:
        return x - math.log(2.0) + math.log1p(-math.exp(-2.0 * x))
    return math.log(math.sinh(x))


def _log_rho_over_sinh(rho: FloatArray) -> FloatArray:
    small = rho < _SERIES_RHO
    safe = np.where(small, 1.0, rho)
    return np.where(small, -rho * rho / 6.0, np.log(safe) - _log_sinh(safe))


def _coth_defect(rho: FloatArray) -> FloatArray:
    """(ρ coth ρ − 1)/ρ²。"""
    small = rho < _SERIES_RHO
    safe = np.where(small, 1.0, rho)
    return np.where(small, 1.0 / 3.0 - rho * rho / 45.0, (safe / np.tanh(safe) - 1.0) / safe**2)


def _log_unit_3(rho: FloatArray, t: float) -> FloatArray:
    return -1.5 * math.log(4.0 * math.pi * t) - t - rho * rho / (4.0 * t) + _log_rho_over_sinh(rho)


def _log_unit_5(rho: FloatArray, t: float) -> FloatArray:
    # −∂_ρ Γ₃/sinh ρ 化簡為 [(ρ coth ρ − 1)/ρ² + 1/(2t)]·(ρ/sinh ρ)²·Γ₃ 的形式
    return (
        -1.5 * math.log(4.0 * math.pi * t)
        - 4.0 * t
        - rho * rho / (4.0 * t)
        - math.log(2.0 * math.pi)
        + np.log(_coth_defect(rho) + 1.0 / (2.0 * t))
        + 2.0 * _log_rho_over_sinh(rho)
    )


def _log_unit_2_scalar(rho: float, t: float) -> float:
    """H² 熱核：√2·e^{−t/4}/(4πt)^{3/2}·∫_ρ^∞ s·e^{−s²/4t}/√(cosh s − cosh ρ) ds。"""
    # cosh(ρ + u²) − cosh ρ = 2 sinh(ρ + u²/2)·sinh(u²/2)
    shift = 0.5 * _log_sinh_scalar(rho) if rho >= 1.0 else 0.0

    def integrand(u: float) -> float:
        y = 0.5 * u * u
        s = rho + u * u
        if y == 0.0:
            if rho == 0.0:
                return 0.0
            return 2.0 * s * math.exp(shift - 0.5 * _log_sinh_scalar(rho))
        log_den = 0.5 * (
            math.log(2.0) + _log_sinh_scalar(rho + y) + _log_sinh_scalar(y) - 2.0 * math.log(u)
        )
        return 2.0 * s * math.exp(-u * u * (2.0 * rho + u * u) / (4.0 * t) + shift - log_den)

    u_max = math.sqrt(-rho + math.sqrt(rho * rho + 4.0 * t * _TAIL_LOG * 4.0))
    value, _ = quad(integrand, 0.0, u_max, epsabs=0.0, epsrel=_QUAD_EPSREL, limit=200)
    if not (value > 0.0):
        raise DomainError(f'H² 熱核積分非正: ρ = {rho}, t = {t}')
    return (
        0.5 * math.log(2.0)
        - t / 4.0
        - 1.5 * math.log(4.0 * math.pi * t)
        - rho * rho / (4.0 * t)
        + math.log(value)
        - shift
    )


def _log_unit(n: int, rho: FloatArray, t: float) -> FloatArray:
    if n == 3:
        return _log_unit_3(rho, t)
    if n == 5:
        return _log_unit_5(rho, t)
    if n == 2:
        flat = [_log_unit_2_scalar(float(r), t) for r in rho.ravel()]
        return np.asarray(flat, dtype=np.float64).reshape(rho.shape)
    return _log_unit_recursive(n, rho, t)


def _log_unit_recursive(n: int, rho: FloatArray, t: float) -> FloatArray:
    """log Γ_n = −(n−2)t − log 2π + log Γ_{n−2} + log(−∂_ρ log Γ_{n−2}/sinh ρ)。"""
    lower = n - 2

    def log_lower(x: FloatArray) -> FloatArray:
        return _log_unit(lower, np.abs(x), t)

    def slope_ratio(x: FloatArray) -> FloatArray:
        h = _DIFF_STEP * np.maximum(1.0, x)
        coarse = (log_lower(x + h) - log_lower(x - h)) / (2.0 * h)
        fine = (log_lower(x + 0.5 * h) - log_lower(x - 0.5 * h)) / h
        derivative = (4.0 * fine - coarse) / 3.0
        return -derivative / np.sinh(x)

    shape = rho.shape
    rho = np.atleast_1d(rho)
    ratio = np.empty_like(rho)
    large = rho >= _SMALL_RHO
    if np.any(large):
        ratio[large] = slope_ratio(rho[large])
    if np.any(~large):
        # g(ρ) 為 ρ 的偶函數：以 g(0) = −L''(0)、g(ρ_s)、g(2ρ_s) 作 ρ² 的二次擬合
        h = 2.0 * _DIFF_STEP
        zero = np.zeros(1)
        l0 = float(log_lower(zero)[0])
        coarse = 2.0 * (float(log_lower(np.array([h]))[0]) - l0) / (h * h)
        fine = 2.0 * (float(log_lower(np.array([0.5 * h]))[0]) - l0) / (0.25 * h * h)
        g0 = -(4.0 * fine - coarse) / 3.0
        g1, g2 = slope_ratio(np.array([_SMALL_RHO, 2.0 * _SMALL_RHO]))
        x1 = _SMALL_RHO**2
        x2 = 4.0 * x1
        coeffs = np.polyfit([0.0, x1, x2], [g0, float(g1), float(g2)], 2)
        ratio[~large] = np.polyval(coeffs, rho[~large] ** 2)
    if np.any(~(ratio > 0.0)):
        raise DomainError(f'N = {n} 遞迴得到非正的 −∂_ρ log Γ/sinh ρ')
    log_value = -(n - 2) * t - math.log(2.0 * math.pi) + log_lower(rho) + np.log(ratio)
    return log_value.reshape(shape)


# =============================================================================
# 公開操作
# =============================================================================


def log_kernel_value(spec: KernelSpec, rho: ArrayLike) -> FloatArray:
    """log Γ(ρ, t)。

    Raises:
        DomainError: ρ < 0
    """
    r = np.asarray(rho, dtype=np.float64)
    if np.any(r < 0.0):
        raise DomainError('測地距離 ρ 必須非負')
    n = spec.dimension
    if spec.curvature == 0.0:
        return -0.5 * n * math.log(4.0 * math.pi * spec.t) - r * r / (4.0 * spec.t)
    k = -spec.curvature
    return 0.5 * n * math.log(k) + _log_unit(n, math.sqrt(k) * r, k * spec.t)


def kernel_value(spec: KernelSpec, rho: ArrayLike) -> FloatArray:
    """Γ(ρ, t) = exp(log Γ)。"""
    return np.exp(log_kernel_value(spec, rho))


def _log_volume_density(spec: KernelSpec, rho: float) -> float:
    """log(ω_{N−1}·σ_K(ρ)^{N−1})。"""
    n = spec.dimension
    log_omega = math.log(2.0) + 0.5 * n * math.log(math.pi) - math.log(gamma_function(0.5 * n))
    if spec.curvature == 0.0:
        log_sigma = math.log(rho)
    else:
        k = math.sqrt(-spec.curvature)
        log_sigma = _log_sinh_scalar(k * rho) - math.log(k)
    return log_omega + (n - 1) * log_sigma


def default_cut_radius(spec: KernelSpec, tol: float) -> float:
    """Gaussian 因子低於 tol 的截斷半徑（含體積指數成長）。"""
    growth = (spec.dimension - 1) * math.sqrt(-spec.curvature)
    t = spec.t
    return 2.0 * growth * t + math.sqrt(4.0 * t * (-math.log(tol) + _TAIL_LOG))


def kernel_mass(spec: KernelSpec, r_cut: float | None = None, tol: float = 1e-10) -> float:
    """∫₀^{R_cut} Γ(ρ, t)·ω_{N−1}·σ_K(ρ)^{N−1} dρ。

    Raises:
        DomainError: 截斷半徑處的被積函數未低於 tol 或仍在增加
    """
    cut = r_cut if r_cut is not None else default_cut_radius(spec, tol)

    def log_integrand(rho: float) -> float:
        return float(log_kernel_value(spec, rho)) + _log_volume_density(spec, rho)

    tail = log_integrand(cut)
    slope = log_integrand(cut) - log_integrand(cut * (1.0 - 1e-3))
    if tail + math.log(cut) > math.log(tol) or slope > 0.0:
        raise DomainError(f'R_cut = {cut} 不足以使尾端低於 {tol}')

    def integrand(rho: float) -> float:
        if rho <= 0.0:
            return 0.0
        return math.exp(log_integrand(rho))

    peak = math.sqrt(2.0 * spec.dimension * spec.t)
    points = [p for p in (0.5 * peak, peak, 2.0 * peak) if p < cut]
    mass, _ = quad(integrand, 0.0, cut, epsabs=0.0, epsrel=1e-11, limit=400, points=points)
    logger.debug('熱核質量', extra={**spec.to_dict(), 'mass': mass, 'r_cut': cut})
    return float(mass)


def pde_residual(spec: KernelSpec, radii: ArrayLike, step: float = 1e-3) -> FloatArray:
    """(∂_t Γ − Γ'' − (N−1)(log σ)'Γ')/|∂_t Γ| 的相對殘差（中央差分）。"""
    r = np.asarray(radii, dtype=np.float64)
    if np.any(r <= step):
        raise DomainError('殘差取樣半徑必須大於差分步長')
    base = kernel_value(spec, r)
    dt = step * spec.t
    later = kernel_value(KernelSpec(spec.dimension, spec.curvature, spec.t + dt), r)
    earlier = kernel_value(KernelSpec(spec.dimension, spec.curvature, spec.t - dt), r)
    d_t = (later - earlier) / (2.0 * dt)
    plus = kernel_value(spec, r + step)
    minus = kernel_value(spec, r - step)
    d1 = (plus - minus) / (2.0 * step)
    d2 = (plus - 2.0 * base + minus) / (step * step)
    drift = spec.ball(float(np.max(r)) + 2.0 * step).drift_coefficient(r)
    return (d_t - d2 - drift * d1) / np.maximum(np.abs(d_t), np.finfo(float).tiny)


# =============================================================================
# 對數凹性
# =============================================================================


def _geodesic_radii(
    spec: KernelSpec,
    p: tuple[float, float],
    q: tuple[float, float],
    params: FloatArray,
) -> tuple[FloatArray, float]:
    """二維截面上 p、q 間測地線在 params 處到極點的距離，以及 d(p, q)。"""
    if spec.curvature == 0.0:
        a = np.array([p[0] * math.cos(p[1]), p[0] * math.sin(p[1])])
        b = np.array([q[0] * math.cos(q[1]), q[0] * math.sin(q[1])])
        points = (1.0 - params)[:, None] * a + params[:, None] * b
        return np.hypot(points[:, 0], points[:, 1]), float(np.hypot(*(b - a)))
    k = math.sqrt(-spec.curvature)

    def lift(point: tuple[float, float]) -> FloatArray:
        r = k * point[0]
        return np.array(
            [math.cosh(r), math.sinh(r) * math.cos(point[1]), math.sinh(r) * math.sin(point[1])]
        )

    x, y = lift(p), lift(q)
    inner = x[0] * y[0] - x[1] * y[1] - x[2] * y[2]
    d = math.acosh(max(inner, 1.0))
    if d == 0.0:
        return np.full_like(params, p[0]), 0.0
    curve = (
        np.sinh((1.0 - params) * d)[:, None] * x + np.sinh(params * d)[:, None] * y
    ) / math.sinh(d)
    radii = np.arcsinh(np.hypot(curve[:, 1], curve[:, 2])) / k
    return radii, d / k


def kernel_log_concavity(
    spec: KernelSpec,
    sample_box_radius: float = 3.0,
    n_pairs: int = DEFAULT_N_PAIRS,
    n_params: int = DEFAULT_N_PARAMS,
    epsilon: float = _KERNEL_EPSILON,
    seed: int = DEFAULT_SEED,
    grid_size: int = _KERNEL_GRID,
) -> ConcavityCertificate:
    """在半徑 sample_box_radius 的區域內認證 Γ(·, o, t) 的嚴格對數凹性。

    徑向部分直接以 w = log Γ 的差分檢查 w' < 0、w'' < −ε；
    測地線部分以閉式測地線（K = 0 直線、K < 0 雙曲面模型）取樣，
    gap 記錄於對數空間。非閉式的維度以 w 的三次樣條求值。
    """
    if not (sample_box_radius > 0.0):
        raise DomainError(f'取樣半徑必須為正: {sample_box_radius}')
    h = sample_box_radius / grid_size
    grid = np.arange(grid_size + 2) * h
    w = log_kernel_value(spec, grid)
    w1 = (w[2:] - w[:-2]) / (2.0 * h)
    w2 = np.empty(grid_size + 1)
    w2[1:] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / (h * h)
    w2[0] = 2.0 * (w[1] - w[0]) / (h * h)
    max_w1 = float(np.max(w1[1:]))
    max_w2 = float(np.max(w2))
    if max_w1 < 0.0 and max_w2 < -epsilon:
        radial: Verdict = 'certified_strict'
    elif max_w1 <= epsilon * sample_box_radius and max_w2 <= epsilon:
        radial = 'certified_weak'
    else:
        radial = 'violated'

    fourth = np.diff(w, n=4)
    interp_error = 0.0 if spec.closed_form else 5.0 / 384.0 * float(np.max(np.abs(fourth)))
    spline = CubicSpline(grid, w, bc_type=((1, 0.0), 'not-a-knot'))

    def log_gamma(r: FloatArray) -> FloatArray:
        if spec.closed_form:
            return log_kernel_value(spec, r)
        return np.asarray(spline(r), dtype=np.float64)

    params = np.arange(1, n_params + 1) / (n_params + 1)
    threshold = epsilon + 2.0 * interp_error
    results: list[GeodesicGap] = []
    strict = True
    weak = True
    for p, q in sample_endpoint_pairs(sample_box_radius, n_pairs, seed):
        radii, distance = _geodesic_radii(spec, p, q, params)
        ends = log_gamma(np.array([p[0], q[0]]))
        lhs = log_gamma(radii)
        rhs = (1.0 - params) * ends[0] + params * ends[1]
        for t, left, right in zip(params, lhs, rhs, strict=True):
            gap = float(left - right)
            results.append(
                GeodesicGap(p=p, q=q, t=float(t), lhs=float(left), rhs=float(right), gap=gap)
            )
            if gap < -threshold:
                weak = False
            if distance > 0.0 and not gap > threshold:
                strict = False
    if strict and weak:
        geodesic: Verdict = 'certified_strict'
    elif weak:
        geodesic = 'certified_weak'
    else:
        geodesic = 'violated'

    verdict = combine_verdicts([radial, geodesic])
    worst = min(r['gap'] for r in results)
    logger.info(
        '熱核對數凹性認證',
        extra={**spec.to_dict(), 'max_w2': max_w2, 'worst_gap': worst, 'verdict': verdict},
    )
    return ConcavityCertificate(
        alpha=0.0,
        method='both',
        verdict=verdict,
        radial_margins=(max_w1, max_w2),
        boundary_cut=0.0,
        epsilon=epsilon,
        geodesic_results=results,
        worst_gap=worst,
        interpolation_error=interp_error,
        log_space=True,
    )


# =============================================================================
# δ-近似
# =============================================================================


def delta_approximation(
    spec: KernelSpec,
    radius: float = 8.0,
    support: float = 0.05,
    grid_size: int = 8192,
    dt: float = 5e-4,
) -> RadialProfile:
    """以正規化的窄 bump 作初值，在大球上做純熱流推進到時間 t。

    bump 為 (1 − (ρ/ε)²)³₊，以 ∫φ dV = 1 正規化；結果應逼近 Γ(·, o, t)。
    """
    if not (0.0 < support < radius / 4.0):
        raise DomainError(f'bump 支撐半徑必須位於 (0, R/4): {support}')
    ball = spec.ball(radius)
    grid = ball.uniform_grid(grid_size)
    bump = np.clip(1.0 - (grid / support) ** 2, 0.0, None) ** 3
    density = np.zeros_like(grid)
    density[1:] = np.exp([_log_volume_density(spec, float(r)) for r in grid[1:]])
    mass = float(np.trapezoid(bump * density, x=grid))
    initial = RadialProfile(grid=grid, values=bump / mass, ball=ball, problem='delta')
    states = evolve(ball, Nonlinearity.heat(), initial, spec.t, dt, [spec.t])
    return states[-1].profile


def delta_approximation_error(
    spec: KernelSpec, profile: RadialProfile, max_radius: float = 3.0
) -> float:
    """δ-近似解與閉式熱核在 ρ ≤ max_radius 上的最大相對誤差。"""
    mask = profile.grid <= max_radius
    exact = kernel_value(spec, profile.grid[mask])
    return float(np.max(np.abs(profile.values[mask] - exact) / exact))
