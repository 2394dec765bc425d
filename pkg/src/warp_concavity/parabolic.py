"""徑向拋物型問題的線方法求解。

∂_t v = v'' + (N−1)(log σ)'v' + R(v)，v'(0, t) = 0、v(R, t) = 0。

線性部分以 Crank–Nicolson 隱式處理（scipy.sparse 三對角 + splu），
反應項 R(v) 顯式處理並做一次固定點修正。原點列使用 2N(v_1 − v_0)/h²。
起步可選 Rannacher 平滑：以四個四分之一步的後向 Euler 取代第一個 CN 步，
抑制非光滑初值的高頻振盪。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import diags, identity
from scipy.sparse.linalg import SuperLU, splu

from warp_concavity.concavity import certify_radial
from warp_concavity.config import DEFAULT_DT, DEFAULT_GRID_SIZE, DEFAULT_T_MAX, DEFAULT_TOL
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.elliptic.shooting import solve_power_bvp
from warp_concavity.exceptions import (
    ContractViolationError,
    DomainError,
    SolverFailureError,
    StiffnessError,
)
from warp_concavity.geometry.ball import Ball
from warp_concavity.types import NonlinearityKind

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
ArrayMap = Callable[[FloatArray], FloatArray]

_POSITIVITY_SLACK = 1e-12
_STEADY_DT = 1e-2
_STEADY_CHUNK = 1.0
_STEADY_SEED = 1e-12
# evolve 輸出狀態的 problem 標記；以此接續時不再做 Rannacher 起步
_EVOLUTION = 'evolution'
_GEOMETRIC_T0 = 1e-4


# =============================================================================
# 資料型別
# =============================================================================


@dataclass(frozen=True)
class EvolutionState:
    """時間 t 的快照。"""

    t: float
    profile: RadialProfile

    def to_dict(self) -> dict[str, Any]:
        return {'t': self.t, 'profile': self.profile.to_dict()}


@dataclass(frozen=True)
class AbsorptionReport:
    """s ↦ e^{−s}G(e^s) 在取樣網格上的性質。"""

    holds: bool
    nonnegative: bool
    nondecreasing: bool
    convex: bool
    min_value: float
    min_increment: float
    min_curvature: float

    def to_dict(self) -> dict[str, float | bool]:
        return {
            'holds': self.holds,
            'nonnegative': self.nonnegative,
            'nondecreasing': self.nondecreasing,
            'convex': self.convex,
            'min_value': self.min_value,
            'min_increment': self.min_increment,
            'min_curvature': self.min_curvature,
        }


@dataclass(frozen=True)
class Nonlinearity:
    """反應項。

    - absorption：∂_t u = Δu − G(u)，G 由 function 提供
    - power_absorption：G(s) = λs^ν，ν ≥ 1
    - power_source：∂_t u = Δu + λu^γ，γ ∈ [0, 1]

    Attributes:
        kind: 種類
        lam: λ ≥ 0
        exponent: ν 或 γ
        function: absorption 種類的 G
    """

    kind: NonlinearityKind
    lam: float = 0.0
    exponent: float = 1.0
    function: ArrayMap | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.lam < 0.0:
            raise DomainError(f'λ 必須非負: {self.lam}')
        if self.kind == 'power_absorption' and self.exponent < 1.0:
            raise DomainError(f'ν 必須 ≥ 1: {self.exponent}')
        if self.kind == 'power_source' and not (0.0 <= self.exponent <= 1.0):
            raise DomainError(f'γ 必須位於 [0, 1]: {self.exponent}')
        if self.kind == 'absorption' and self.function is None:
            raise ContractViolationError('absorption 需要提供 G')

    # --- 建構 ---

    @classmethod
    def heat(cls) -> Nonlinearity:
        """純熱流 G ≡ 0。"""
        return cls('power_absorption', 0.0, 1.0)

    @classmethod
    def absorption(cls, function: ArrayMap) -> Nonlinearity:
        return cls('absorption', 1.0, 1.0, function)

    @classmethod
    def power_absorption(cls, lam: float, nu: float) -> Nonlinearity:
        return cls('power_absorption', lam, nu)

    @classmethod
    def power_source(cls, lam: float, gamma: float) -> Nonlinearity:
        return cls('power_source', lam, gamma)

    # --- 計算 ---

    def absorption_term(self, s: FloatArray) -> FloatArray:
        """G(s)（source 種類回傳 −λs^γ）。"""
        s = np.maximum(s, 0.0)
        if self.kind == 'absorption':
            assert self.function is not None
            return np.asarray(self.function(s), dtype=np.float64)
        if self.kind == 'power_absorption':
            return self.lam * s**self.exponent
        return -self.lam * s**self.exponent

    def reaction(self, v: FloatArray) -> FloatArray:
        """∂_t v 中的反應項 −G(v)。"""
        return -self.absorption_term(v)

    @property
    def is_absorption(self) -> bool:
        return self.kind != 'power_source'

    def check_condition(
        self, s_min: float = -20.0, s_max: float = 5.0, samples: int = 501
    ) -> AbsorptionReport:
        """檢查 s ↦ e^{−s}G(e^s) 非負、非遞減且凸。

        Raises:
            ContractViolationError: source 種類沒有此條件
        """
        if not self.is_absorption:
            raise ContractViolationError('吸收條件只適用於 absorption 種類')
        s = np.linspace(s_min, s_max, samples)
        g = np.exp(-s) * self.absorption_term(np.exp(s))
        scale = max(float(np.max(np.abs(g))), np.finfo(float).tiny)
        slack = 1e-10 * scale
        increments = np.diff(g)
        curvature = np.diff(g, n=2)
        nonnegative = bool(np.min(g) >= -slack)
        nondecreasing = bool(np.min(increments) >= -slack)
        convex = bool(np.min(curvature) >= -slack)
        return AbsorptionReport(
            holds=nonnegative and nondecreasing and convex,
            nonnegative=nonnegative,
            nondecreasing=nondecreasing,
            convex=convex,
            min_value=float(np.min(g)),
            min_increment=float(np.min(increments)),
            min_curvature=float(np.min(curvature)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {'kind': self.kind, 'lambda': self.lam, 'exponent': self.exponent}


# =============================================================================
# 離散算子
# =============================================================================


class _RadialLaplacian:
    """徑向 Laplacian 的三對角矩陣與 (θ, dt) 的 LU 快取。"""

    def __init__(self, ball: Ball, grid: FloatArray) -> None:
        m = grid.size - 1
        h = float(grid[1] - grid[0])
        n = ball.dimension
        drift = ball.drift_coefficient(grid[1:-1])
        main = np.zeros(m + 1)
        upper = np.zeros(m)
        lower = np.zeros(m)
        main[0] = -2.0 * n / (h * h)
        upper[0] = 2.0 * n / (h * h)
        main[1:m] = -2.0 / (h * h)
        upper[1:m] = 1.0 / (h * h) + drift / (2.0 * h)
        lower[: m - 1] = 1.0 / (h * h) - drift / (2.0 * h)
        self.matrix = diags([lower, main, upper], [-1, 0, 1], format='csc')
        self.size = m + 1
        self._cache: dict[tuple[float, float], tuple[SuperLU, Any]] = {}

    def operators(self, dt: float, theta: float) -> tuple[SuperLU, Any]:
        key = (dt, theta)
        if key not in self._cache:
            eye = identity(self.size, format='csc')
            implicit = (eye - theta * dt * self.matrix).tocsc()
            explicit = (eye + (1.0 - theta) * dt * self.matrix).tocsr()
            self._cache[key] = (splu(implicit), explicit)
        return self._cache[key]


def _advance(
    laplacian: _RadialLaplacian,
    nl: Nonlinearity,
    v: FloatArray,
    dt: float,
    theta: float,
) -> FloatArray:
    lu, explicit = laplacian.operators(dt, theta)
    r0 = nl.reaction(v)
    r0[-1] = 0.0
    norm = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    sub_step = v + dt * r0
    if float(np.min(sub_step)) < -_POSITIVITY_SLACK * norm:
        raise StiffnessError(f'顯式反應子步驟破壞正值性（dt = {dt}），請減半 dt')

    base = explicit @ v
    predictor = lu.solve(base + dt * r0)
    predictor[-1] = 0.0
    r1 = nl.reaction(predictor)
    r1[-1] = 0.0
    corrected = lu.solve(base + 0.5 * dt * (r0 + r1))
    corrected[-1] = 0.0
    return corrected


# =============================================================================
# 公開操作
# =============================================================================


def geometric_times(t_end: float, t0: float = _GEOMETRIC_T0) -> list[float]:
    """t_k = t0·2^k（≤ t_end），最後補上 t_end。"""
    times: list[float] = []
    t = t0
    while t < t_end:
        times.append(t)
        t *= 2.0
    times.append(t_end)
    return times


def evolve(
    ball: Ball,
    nl: Nonlinearity,
    initial: RadialProfile,
    t_end: float,
    dt: float = DEFAULT_DT,
    sample_times: Sequence[float] | None = None,
    smoothing: bool | None = None,
) -> list[EvolutionState]:
    """以 Crank–Nicolson 推進徑向拋物型問題，回傳各取樣時間的狀態。

    每個取樣區間 Δ 使用 dt_k = Δ/⌈Δ/dt⌉，使取樣時間落在步點上。

    Args:
        ball: 旋轉對稱球（須與 initial.ball 一致）
        nl: 反應項
        initial: 初值，非負且 v(R) = 0
        t_end: 終止時間
        dt: 時間步長上限
        sample_times: 取樣時間（預設為幾何序列 1e-4·2^k）
        smoothing: 是否以 Rannacher 後向 Euler 起步；None 時只對原始初值起步，
            由先前 evolve 狀態（problem = 'evolution'）接續時不起步

    Raises:
        DomainError: 初值為負、邊界值非零或時間參數無效
        StiffnessError: 顯式子步驟破壞正值性
    """
    if not (t_end > 0.0) or not (dt > 0.0):
        raise DomainError(f't_end 與 dt 必須為正: {t_end}, {dt}')
    values = np.array(initial.values, dtype=np.float64)
    scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    if float(np.min(values)) < -_POSITIVITY_SLACK * scale:
        raise DomainError('初值必須非負')
    if abs(float(values[-1])) > _POSITIVITY_SLACK * scale:
        raise DomainError(f'初值必須滿足 v(R) = 0，收到 {values[-1]}')
    values[-1] = 0.0

    requested = geometric_times(t_end) if sample_times is None else list(sample_times)
    targets = sorted({float(t) for t in requested if 0.0 <= t <= t_end})
    if not targets or targets[-1] != t_end:
        targets.append(t_end)

    laplacian = _RadialLaplacian(ball, initial.grid)
    states: list[EvolutionState] = []
    t = 0.0
    first_step = smoothing if smoothing is not None else initial.problem != _EVOLUTION
    for target in targets:
        span = target - t
        if span > 0.0:
            n_steps = max(1, math.ceil(span / dt - 1e-9))
            step = span / n_steps
            for _ in range(n_steps):
                if first_step:
                    for _ in range(4):
                        values = _advance(laplacian, nl, values, 0.25 * step, 1.0)
                    first_step = False
                else:
                    values = _advance(laplacian, nl, values, step, 0.5)
            t = target
        states.append(
            EvolutionState(
                t=target,
                profile=initial.with_values(
                    values.copy(), problem=_EVOLUTION, metadata={'t': target, **nl.to_dict()}
                ),
            )
        )

    logger.info(
        '拋物型推進完成',
        extra={'t_end': t_end, 'samples': len(states), 'kind': nl.kind},
    )
    return states


def steady_state(
    ball: Ball,
    lam: float,
    gamma: float,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID_SIZE,
    t_max: float = DEFAULT_T_MAX,
    dt: float = _STEADY_DT,
) -> RadialProfile:
    """由零初值推進 ∂_t u = Δu + λu^γ 直到 ‖v(t+1) − v(t)‖∞ ≤ tol·‖v‖∞。

    γ > 0 時零函數本身就是穩態，改以 1e-12·(R² − r²) 為起點以選出正解。
    收斂後與 solve_power_bvp 交叉比對，相對差距記錄於 metadata。

    Raises:
        DomainError: λ ≤ 0 或 γ 不在 [0, 1]
        ContractViolationError: γ = 1（與特徵值共振）
        SolverFailureError: t_max 內未收斂，或與射擊解的差距超過 10·tol
    """
    if not (lam > 0.0):
        raise DomainError(f'λ 必須為正: {lam}')
    if not (0.0 <= gamma <= 1.0):
        raise DomainError(f'γ 必須位於 [0, 1]: {gamma}')
    if gamma == 1.0:
        raise ContractViolationError('γ = 1 與第一特徵值共振，沒有一般的穩態')

    grid = ball.uniform_grid(grid_size)
    if gamma == 0.0:
        seed = np.zeros_like(grid)
    else:
        seed = _STEADY_SEED * (ball.radius**2 - grid**2)
    current = RadialProfile(grid=grid, values=seed, ball=ball, problem='steady')
    nl = Nonlinearity.power_source(lam, gamma)

    t = 0.0
    while t < t_max:
        states = evolve(ball, nl, current, _STEADY_CHUNK, dt, [_STEADY_CHUNK], smoothing=False)
        nxt = states[-1].profile
        t += _STEADY_CHUNK
        norm = float(np.max(np.abs(nxt.values)))
        change = float(np.max(np.abs(nxt.values - current.values)))
        current = nxt
        logger.debug('穩態迭代', extra={'t': t, 'change': change, 'norm': norm})
        if norm > 0.0 and change <= tol * norm:
            break
    else:
        raise SolverFailureError(f'穩態在 t_max = {t_max} 內未收斂')

    reference = solve_power_bvp(ball, lam, gamma, tol, grid_size)
    gap = float(np.max(np.abs(current.values - reference.values))) / float(
        np.max(np.abs(reference.values))
    )
    if gap > 10.0 * tol:
        logger.error('穩態與射擊解差距超過 10·tol', extra={'gap': gap, 'tol': tol})
        raise SolverFailureError(f'穩態與射擊解的相對差距 {gap:.3e} 超過 10·tol = {10.0 * tol:.3e}')
    logger.info('穩態收斂', extra={'t': t, 'shooting_gap': gap})
    return current.with_values(
        current.values,
        problem='steady',
        metadata={'t': t, 'lambda': lam, 'gamma': gamma, 'shooting_gap': gap},
    )


def concavity_onset_time(
    states: Sequence[EvolutionState],
    alpha: float,
    margin: float | None = None,
    boundary_cut: float | None = None,
) -> float | None:
    """最早的取樣時間 T，使之後每個取樣都通過嚴格的徑向認證；從未通過回傳 None。"""
    onset: float | None = None
    for state in sorted(states, key=lambda s: s.t, reverse=True):
        try:
            cert = certify_radial(state.profile, None, alpha, boundary_cut, margin)
        except DomainError:
            break
        if not cert.strict:
            break
        onset = state.t
    logger.info('凹性起始時間', extra={'alpha': alpha, 'onset': onset})
    return onset
