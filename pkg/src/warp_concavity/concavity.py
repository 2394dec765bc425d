"""α-凹性認證。

兩條路徑：
- 徑向：w = L_{1−α}(v) 的差分導數滿足 w' < 0、w'' < −ε（邊界帶 δ 之外）。
  由距離函數的凸性，徑向條件蘊含沿所有測地線的 α-凹性。
- 測地線：隨機端點對以最短測地線連接，直接檢查 α-平均不等式
  u(c(t)) ≥ M_α(u(c(0)), u(c(1)); t)。

所有結論都是網格層級的數值見證，不是證明。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.stats import qmc

from warp_concavity.config import (
    DEFAULT_BOUNDARY_CUT_FRACTION,
    DEFAULT_EPSILON,
    DEFAULT_N_PAIRS,
    DEFAULT_N_PARAMS,
    DEFAULT_SEED,
    GeometrySettings,
)
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.exceptions import ContractViolationError, DomainError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.geodesic import connect_geodesics
from warp_concavity.power_means import alpha_mean, q_exp, q_log
from warp_concavity.types import (
    CertificateDict,
    CertificationMethod,
    GeodesicGap,
    Verdict,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# 距離極點 1e-3 以內的參數不檢查嚴格性
_POLE_SKIP = 1e-3
# 判定曲線經過極點的半徑門檻（相對 R）
_POLE_RADIUS = 1e-6

_VERDICT_RANK: dict[Verdict, int] = {'violated': 0, 'certified_weak': 1, 'certified_strict': 2}


# =============================================================================
# 證書
# =============================================================================


@dataclass(frozen=True)
class ConcavityCertificate:
    """α-凹性證書。

    Attributes:
        alpha: 檢查的 α
        method: radial / geodesic / both
        verdict: certified_strict / certified_weak / violated
        radial_margins: (max w', max w'')，未跑徑向檢查為 None
        boundary_cut: 邊界帶寬 δ
        epsilon: 嚴格性餘裕（絕對值）
        geodesic_results: 測地線抽樣紀錄，gap = lhs − rhs
        worst_gap: 最小 gap，未跑測地線檢查為 None
        interpolation_error: 三次樣條插值誤差估計
        skipped_parameters: 因靠近極點而略過的參數數
        log_space: geodesic_results 是否記錄於對數空間
        scenario_hash: 所屬情境的雜湊（由 pipeline 填入）
    """

    alpha: float
    method: CertificationMethod
    verdict: Verdict
    radial_margins: tuple[float, float] | None = None
    boundary_cut: float = 0.0
    epsilon: float = 0.0
    geodesic_results: list[GeodesicGap] = field(default_factory=lambda: [])
    worst_gap: float | None = None
    interpolation_error: float = 0.0
    skipped_parameters: int = 0
    log_space: bool = False
    scenario_hash: str | None = None

    @property
    def strict(self) -> bool:
        return self.verdict == 'certified_strict'

    @property
    def passed(self) -> bool:
        return self.verdict != 'violated'

    def with_hash(self, scenario_hash: str) -> ConcavityCertificate:
        return replace(self, scenario_hash=scenario_hash)

    def to_dict(self) -> CertificateDict:
        """轉換為可序列化的字典。"""
        data = CertificateDict(
            alpha=self.alpha,
            method=self.method,
            verdict=self.verdict,
            radial_margins=self.radial_margins,
            boundary_cut=self.boundary_cut,
            epsilon=self.epsilon,
            worst_gap=self.worst_gap,
            interpolation_error=self.interpolation_error,
            skipped_parameters=self.skipped_parameters,
            log_space=self.log_space,
            geodesic_results=list(self.geodesic_results),
        )
        if self.scenario_hash is not None:
            data['scenario_hash'] = self.scenario_hash
        return data

    @classmethod
    def from_dict(cls, data: CertificateDict | dict[str, Any]) -> ConcavityCertificate:
        """由 to_dict() 的輸出（或其 JSON 解碼）重建。"""
        margins = data.get('radial_margins')
        results: list[GeodesicGap] = []
        for item in data.get('geodesic_results', []):
            results.append(
                GeodesicGap(
                    p=(float(item['p'][0]), float(item['p'][1])),
                    q=(float(item['q'][0]), float(item['q'][1])),
                    t=float(item['t']),
                    lhs=float(item['lhs']),
                    rhs=float(item['rhs']),
                    gap=float(item['gap']),
                )
            )
        worst = data.get('worst_gap')
        return cls(
            alpha=float(data['alpha']),
            method=data['method'],
            verdict=data['verdict'],
            radial_margins=(float(margins[0]), float(margins[1])) if margins else None,
            boundary_cut=float(data.get('boundary_cut', 0.0)),
            epsilon=float(data.get('epsilon', 0.0)),
            geodesic_results=results,
            worst_gap=float(worst) if worst is not None else None,
            interpolation_error=float(data.get('interpolation_error', 0.0)),
            skipped_parameters=int(data.get('skipped_parameters', 0)),
            log_space=bool(data.get('log_space', False)),
            scenario_hash=data.get('scenario_hash'),
        )


def combine_verdicts(verdicts: list[Verdict]) -> Verdict:
    """取最弱的判定。"""
    return min(verdicts, key=lambda v: _VERDICT_RANK[v])


# =============================================================================
# 轉換與徑向認證
# =============================================================================


class WTransform(NamedTuple):
    """w = L_{1−α}(v) 於內部節點 r_0..r_{M−1} 的值與中央差分。

    w1、w2 的最後一點沒有中央差分，填 NaN。
    """

    grid: FloatArray
    w: FloatArray
    w1: FloatArray
    w2: FloatArray


def _check_alpha(alpha: float) -> None:
    if not (0.0 <= alpha <= 1.0):
        raise ContractViolationError(f'α 必須位於 [0, 1]: {alpha}')


def w_transform(profile: RadialProfile, alpha: float) -> WTransform:
    """計算 w = L_q(v)（q = 1 − α）及其二階中央差分導數。

    Raises:
        ContractViolationError: α 不在 [0, 1]
        DomainError: 內部節點出現非正值
    """
    _check_alpha(alpha)
    interior = profile.values[:-1]
    if np.any(~(interior > 0.0)):
        raise DomainError('w 轉換需要內部節點 v > 0')
    h = profile.step
    w = q_log(1.0 - alpha, interior)
    w1 = np.full_like(w, np.nan)
    w2 = np.full_like(w, np.nan)
    w1[1:-1] = (w[2:] - w[:-2]) / (2.0 * h)
    w1[0] = 0.0
    w2[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / (h * h)
    w2[0] = 2.0 * (w[1] - w[0]) / (h * h)
    return WTransform(profile.grid[:-1], w, w1, w2)


def default_epsilon(
    profile: RadialProfile, alpha: float, relative: float = DEFAULT_EPSILON
) -> float:
    """w'' 的自然量級：relative·(max v)^α / R²。"""
    return relative * profile.scale**alpha / profile.radius**2


def _resolve_cut(radius: float, boundary_cut: float | None) -> float:
    delta = boundary_cut if boundary_cut is not None else DEFAULT_BOUNDARY_CUT_FRACTION * radius
    if not (0.0 < delta < radius / 4.0):
        raise ContractViolationError(f'邊界帶寬 δ 必須位於 (0, R/4): {delta}')
    return delta


def certify_radial(
    profile: RadialProfile,
    ball: Ball | None = None,
    alpha: float = 1.0,
    boundary_cut: float | None = None,
    epsilon: float | None = None,
) -> ConcavityCertificate:
    """徑向準則認證 α-凹性。

    - certified_strict：max w' < 0 於 (h, R−δ]，且 max w'' < −ε 於 [0, R−δ]
    - certified_weak：max w' ≤ ε·R 且 max w'' ≤ ε
    - violated：其他

    Args:
        profile: 徑向解（內部為正）
        ball: 球（預設使用 profile.ball）
        alpha: α ∈ [0, 1]
        boundary_cut: δ ∈ (0, R/4)，預設 R/64
        epsilon: 嚴格性餘裕，預設 1e-8·(max v)^α/R²
    """
    _check_alpha(alpha)
    target = ball or profile.ball
    radius = target.radius
    delta = _resolve_cut(radius, boundary_cut)
    eps = epsilon if epsilon is not None else default_epsilon(profile, alpha)

    transform = w_transform(profile, alpha)
    inside = transform.grid <= radius - delta
    inside[-1] = False
    h = profile.step
    slope_region = inside & (transform.grid > h * (1.0 + 1e-9))
    max_w1 = float(np.max(transform.w1[slope_region]))
    max_w2 = float(np.max(transform.w2[inside]))

    if max_w1 < 0.0 and max_w2 < -eps:
        verdict: Verdict = 'certified_strict'
    elif max_w1 <= eps * radius and max_w2 <= eps:
        verdict = 'certified_weak'
    else:
        verdict = 'violated'

    logger.debug(
        '徑向認證',
        extra={'alpha': alpha, 'max_w1': max_w1, 'max_w2': max_w2, 'verdict': verdict},
    )
    return ConcavityCertificate(
        alpha=alpha,
        method='radial',
        verdict=verdict,
        radial_margins=(max_w1, max_w2),
        boundary_cut=delta,
        epsilon=eps,
        interpolation_error=profile.interpolation_error_bound(),
    )


# =============================================================================
# 測地線抽樣
# =============================================================================


def sample_endpoint_pairs(
    radius: float, n_pairs: int, seed: int
) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """(半徑², 角度) 上均勻的低差異端點對（scrambled Halton，d = 4）。"""
    sampler = qmc.Halton(d=4, scramble=True, seed=seed)
    points = sampler.random(n_pairs)
    r_p = radius * np.sqrt(points[:, 0])
    r_q = radius * np.sqrt(points[:, 2])
    phi_p = 2.0 * math.pi * points[:, 1]
    phi_q = 2.0 * math.pi * points[:, 3]
    return [
        ((float(r_p[i]), float(phi_p[i])), (float(r_q[i]), float(phi_q[i])))
        for i in range(n_pairs)
    ]


def certify_geodesic_samples(
    ball: Ball,
    profile: RadialProfile,
    alpha: float,
    n_pairs: int = DEFAULT_N_PAIRS,
    n_params: int = DEFAULT_N_PARAMS,
    epsilon: float = DEFAULT_EPSILON,
    seed: int = DEFAULT_SEED,
    settings: GeometrySettings | None = None,
) -> ConcavityCertificate:
    """沿隨機最短測地線直接檢查 α-平均不等式。

    嚴格性要求 gap > ε·max v + 2·插值誤差；端點值為 0 時只檢查弱不等式。

    Raises:
        ContractViolationError: α 不在 [0, 1]
        SolverFailureError: 測地線連接失敗
    """
    _check_alpha(alpha)
    if n_pairs < 1 or n_params < 1:
        raise ContractViolationError('n_pairs 與 n_params 必須為正')

    spline = profile.interpolant()
    interp_error = profile.interpolation_error_bound()
    threshold = epsilon * profile.scale + 2.0 * interp_error
    pairs = sample_endpoint_pairs(ball.radius, n_pairs, seed)
    geodesics = connect_geodesics(ball, pairs, settings=settings)
    params = np.arange(1, n_params + 1) / (n_params + 1)

    def evaluate(r: FloatArray) -> FloatArray:
        return np.maximum(np.asarray(spline(np.clip(r, 0.0, ball.radius)), dtype=np.float64), 0.0)

    results: list[GeodesicGap] = []
    skipped = 0
    all_strict = True
    all_weak = True
    for (p, q), geodesic in zip(pairs, geodesics, strict=True):
        u0, u1 = evaluate(np.array([p[0], q[0]]))
        lhs = evaluate(geodesic.radius_at(params))
        t0 = geodesic.pole_parameter(_POLE_RADIUS * ball.radius)
        for t, value in zip(params, lhs, strict=True):
            rhs = alpha_mean(alpha, float(u0), float(u1), float(t))
            gap = float(value) - rhs
            results.append(
                GeodesicGap(p=p, q=q, t=float(t), lhs=float(value), rhs=rhs, gap=gap)
            )
            if gap < -threshold:
                all_weak = False
            if t0 is not None and abs(float(t) - t0) < _POLE_SKIP:
                skipped += 1
                continue
            if u0 == 0.0 or u1 == 0.0:
                continue
            if not gap > threshold:
                all_strict = False

    if skipped:
        logger.warning('略過靠近極點的測地線參數', extra={'skipped': skipped})
    if all_weak and all_strict:
        verdict: Verdict = 'certified_strict'
    elif all_weak:
        verdict = 'certified_weak'
    else:
        verdict = 'violated'
    worst = min(r['gap'] for r in results)
    logger.info(
        '測地線抽樣認證完成',
        extra={'alpha': alpha, 'pairs': n_pairs, 'worst_gap': worst, 'verdict': verdict},
    )
    return ConcavityCertificate(
        alpha=alpha,
        method='geodesic',
        verdict=verdict,
        epsilon=threshold,
        geodesic_results=results,
        worst_gap=worst,
        interpolation_error=interp_error,
        skipped_parameters=skipped,
    )


def certify(
    profile: RadialProfile,
    alpha: float,
    method: CertificationMethod = 'both',
    boundary_cut: float | None = None,
    epsilon: float = DEFAULT_EPSILON,
    n_pairs: int = DEFAULT_N_PAIRS,
    n_params: int = DEFAULT_N_PARAMS,
    seed: int = DEFAULT_SEED,
    settings: GeometrySettings | None = None,
) -> ConcavityCertificate:
    """依 method 執行徑向、測地線或兩者，合併為單一證書（取較弱的判定）。

    epsilon 為相對係數：徑向門檻取 default_epsilon(profile, α, epsilon)，
    測地線門檻取 epsilon·max v，兩者共用同一個係數。
    """
    ball = profile.ball
    radial_margin = default_epsilon(profile, alpha, epsilon)
    radial = (
        certify_radial(profile, ball, alpha, boundary_cut, radial_margin)
        if method in ('radial', 'both')
        else None
    )
    geodesic = (
        certify_geodesic_samples(
            ball, profile, alpha, n_pairs, n_params, epsilon, seed, settings
        )
        if method in ('geodesic', 'both')
        else None
    )
    if radial is not None and geodesic is None:
        return radial
    if geodesic is not None and radial is None:
        return geodesic
    assert radial is not None and geodesic is not None
    if radial.strict and geodesic.verdict == 'violated':
        logger.warning('徑向嚴格認證與測地線抽樣結果不一致', extra={'alpha': alpha})
    return replace(
        geodesic,
        method='both',
        verdict=combine_verdicts([radial.verdict, geodesic.verdict]),
        radial_margins=radial.radial_margins,
        boundary_cut=radial.boundary_cut,
        epsilon=radial.epsilon,
    )


# =============================================================================
# 轉換方程式與乘積形式
# =============================================================================


class TransformResidual(NamedTuple):
    """轉換方程式在內部子網格上的殘差。"""

    radii: FloatArray
    residual: FloatArray
    max_abs: float
    relative: float


def transformed_residual(
    profile: RadialProfile,
    alpha: float,
    source: Callable[[float], float],
    boundary_cut: float | None = None,
) -> TransformResidual:
    """w'' + q·E_q(w)^{q−1}(w')² + (N−1)(log σ)'w' + F(E_q(w))/E_q(w)^q 的殘差。

    在 (0, R−δ] 的內部子網格上以中央差分評估；relative 以各項最大量級正規化。
    """
    _check_alpha(alpha)
    q = 1.0 - alpha
    ball = profile.ball
    delta = _resolve_cut(ball.radius, boundary_cut)
    transform = w_transform(profile, alpha)
    mask = (transform.grid > 0.0) & (transform.grid <= ball.radius - delta)
    mask[-1] = False
    radii = transform.grid[mask]
    w = transform.w[mask]
    w1 = transform.w1[mask]
    w2 = transform.w2[mask]
    v = q_exp(q, w)
    drift = ball.drift_coefficient(radii)
    forcing = np.array([source(float(s)) for s in v]) / v**q
    terms = [w2, q * v ** (q - 1.0) * w1 * w1, drift * w1, forcing]
    residual = terms[0] + terms[1] + terms[2] + terms[3]
    max_abs = float(np.max(np.abs(residual)))
    magnitude = max(float(np.max(np.abs(t))) for t in terms)
    return TransformResidual(radii, residual, max_abs, max_abs / magnitude)


class DefectReport(NamedTuple):
    """v·v'' − (1−α)(v')² 的最大值與位置。"""

    max_defect: float
    worst_radius: float


def power_concavity_defect(
    profile: RadialProfile, alpha: float, boundary_cut: float | None = None
) -> DefectReport:
    """乘積形式的 α-凹性準則；最大值為負即為嚴格見證。"""
    _check_alpha(alpha)
    delta = _resolve_cut(profile.radius, boundary_cut)
    v = profile.values
    d1 = profile.first_derivative
    d2 = profile.second_derivative
    defect = v * d2 - (1.0 - alpha) * d1 * d1
    mask = profile.grid <= profile.radius - delta
    idx = int(np.argmax(np.where(mask, defect, -np.inf)))
    return DefectReport(float(defect[idx]), float(profile.grid[idx]))
