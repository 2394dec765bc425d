"""幾何假設檢查。

在 (δ₀, R] 的均勻網格上評估曲率條件，δ₀ = R/(10·grid_size) 避開座標奇點。
嚴格不等式以 worst_margin 的正負號直接判定（容許值 0），屬於網格層級的驗證而非證明。

margin 慣例：
- C2-necessary：min σ'，> 0 成立
- Eq11 / Eq12：被檢查左式的上確界，< 0（或 ≤ 0）成立
- Eq13：max(sup (log σ)'', −inf (log σ)''')
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from warp_concavity.config import DEFAULT_CONDITION_GRID
from warp_concavity.exceptions import ContractViolationError, DomainError
from warp_concavity.geometry.ball import Ball
from warp_concavity.types import ConditionId, ConditionReportDict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConditionReport:
    """條件檢查結果。

    Attributes:
        condition: 條件識別
        holds: 是否成立
        worst_margin: 網格上最不利的值（慣例見模組說明）
        worst_radius: 最不利值所在半徑
        alpha: 條件使用的 α（若有）
        lambda1: 條件使用的 λ₁（若有）
    """

    condition: ConditionId
    holds: bool
    worst_margin: float
    worst_radius: float
    alpha: float | None = None
    lambda1: float | None = None

    def to_dict(self) -> ConditionReportDict:
        """轉換為可序列化的字典。"""
        return ConditionReportDict(
            condition=self.condition,
            alpha=self.alpha,
            lambda1=self.lambda1,
            holds=self.holds,
            worst_margin=self.worst_margin,
            worst_radius=self.worst_radius,
        )

    @classmethod
    def from_dict(cls, data: ConditionReportDict | dict[str, Any]) -> ConditionReport:
        """由 to_dict() 的輸出重建。"""
        return cls(
            condition=data['condition'],
            holds=bool(data['holds']),
            worst_margin=float(data['worst_margin']),
            worst_radius=float(data['worst_radius']),
            alpha=data.get('alpha'),
            lambda1=data.get('lambda1'),
        )


def condition_grid(ball: Ball, grid_size: int = DEFAULT_CONDITION_GRID) -> NDArray[np.float64]:
    """(δ₀, R] 上的均勻網格，δ₀ = R/(10·grid_size)。"""
    if grid_size < 2:
        raise DomainError(f'條件網格至少需要 2 點: {grid_size}')
    delta0 = ball.radius / (10.0 * grid_size)
    return np.linspace(delta0, ball.radius, grid_size)


def check_condition(
    ball: Ball,
    which: ConditionId,
    alpha: float | None = None,
    lambda1: float | None = None,
    grid_size: int = DEFAULT_CONDITION_GRID,
) -> ConditionReport:
    """檢查球上的幾何條件。

    Args:
        ball: 旋轉對稱球
        which: C2-necessary / Eq11 / Eq12 / Eq13
        alpha: Eq11 需要 α ∈ [0, 1]；Eq12 需要 α ∈ (0, 1)
        lambda1: Eq12 需要的第一 Dirichlet 特徵值
        grid_size: 網格點數

    Returns:
        ConditionReport

    Raises:
        ContractViolationError: 缺少條件所需的 α 或 λ₁，或超出允許範圍
    """
    grid = condition_grid(ball, grid_size)

    if which == 'C2-necessary':
        _, s1, _, _ = ball.factor.derivatives(grid)
        idx = int(np.argmin(s1))
        worst = float(s1[idx])
        report = ConditionReport(which, worst > 0.0, worst, float(grid[idx]))

    elif which == 'Eq11':
        if alpha is None or not (0.0 <= alpha <= 1.0):
            raise ContractViolationError(f'Eq11 需要 α ∈ [0, 1]，收到 {alpha}')
        d2 = ball.factor.log_derivatives(grid).d2
        idx = int(np.argmax(d2))
        worst = float(d2[idx])
        strict = alpha in (0.0, 1.0)
        holds = worst < 0.0 if strict else worst <= 0.0
        report = ConditionReport(which, holds, worst, float(grid[idx]), alpha=alpha)

    elif which == 'Eq12':
        if alpha is None or not (0.0 < alpha < 1.0):
            raise ContractViolationError(f'Eq12 需要 α ∈ (0, 1)，收到 {alpha}')
        if lambda1 is None or not (lambda1 > 0.0):
            raise ContractViolationError(f'Eq12 需要 λ₁ > 0，收到 {lambda1}')
        d2 = ball.factor.log_derivatives(grid).d2
        values = d2 + alpha * lambda1 / (ball.dimension - 1)
        idx = int(np.argmax(values))
        worst = float(values[idx])
        report = ConditionReport(
            which, worst <= 0.0, worst, float(grid[idx]), alpha=alpha, lambda1=lambda1
        )

    elif which == 'Eq13':
        logs = ball.factor.log_derivatives(grid)
        i2 = int(np.argmax(logs.d2))
        i3 = int(np.argmin(logs.d3))
        sup_d2 = float(logs.d2[i2])
        inf_d3 = float(logs.d3[i3])
        holds = sup_d2 < 0.0 and inf_d3 >= 0.0
        if sup_d2 >= -inf_d3:
            worst, where = sup_d2, float(grid[i2])
        else:
            worst, where = -inf_d3, float(grid[i3])
        report = ConditionReport(which, holds, worst, where)

    else:
        raise ContractViolationError(f'未知的條件: {which!r}')

    logger.debug(
        '條件檢查完成',
        extra={'condition': which, 'holds': report.holds, 'worst_margin': report.worst_margin},
    )
    return report


def require_convex(ball: Ball, grid_size: int = DEFAULT_CONDITION_GRID) -> None:
    """確認強凸性的必要條件 σ' > 0，否則拋出 DomainError。"""
    report = check_condition(ball, 'C2-necessary', grid_size=grid_size)
    if not report.holds:
        raise DomainError(
            f"球不滿足 σ' > 0（最小值 {report.worst_margin} 於 r={report.worst_radius}）"
        )
