"""q-對數、q-指數與 α-加權平均。

所有凹性轉換 w = L_{1−α}(v) 都建立在這三個函數上。
函數同時接受純量與 numpy 陣列；純量輸入回傳 float。
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import overload

import numpy as np
from numpy.typing import NDArray

from warp_concavity.exceptions import DomainError

FloatArray = NDArray[np.float64]

# |1 − q| 小於此值時直接使用 log / exp
_Q_ONE_SWITCH = 1e-12


@dataclass(frozen=True)
class QIndex:
    """q-對數指標，0 ≤ q ≤ 1。"""

    q: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.q <= 1.0):
            raise DomainError(f'q 必須位於 [0, 1]: {self.q}')

    @property
    def floor(self) -> float:
        """q-指數的定義域下界 ℓ_q。"""
        return ell_q(self.q)


@dataclass(frozen=True)
class AlphaIndex:
    """α-平均指標，α ∈ [−∞, +∞]。"""

    alpha: float

    def __post_init__(self) -> None:
        if math.isnan(self.alpha):
            raise DomainError('α 不可為 NaN')

    @property
    def q(self) -> QIndex:
        """轉換用的 q = 1 − α，僅在 α ∈ [0, 1] 時有效。"""
        return QIndex(1.0 - self.alpha)


def _as_q(q: QIndex | float) -> float:
    return q.q if isinstance(q, QIndex) else QIndex(float(q)).q


def _as_alpha(alpha: AlphaIndex | float) -> float:
    return alpha.alpha if isinstance(alpha, AlphaIndex) else AlphaIndex(float(alpha)).alpha


def ell_q(q: QIndex | float) -> float:
    """回傳 ℓ_q：q < 1 時為 −1/(1−q)，q = 1 時為 −∞。"""
    value = _as_q(q)
    one_minus = 1.0 - value
    if abs(one_minus) < _Q_ONE_SWITCH:
        return -math.inf
    return -1.0 / one_minus


# --- q-對數 / q-指數 ---


@overload
def q_log(q: QIndex | float, xi: float) -> float: ...
@overload
def q_log(q: QIndex | float, xi: FloatArray) -> FloatArray: ...
def q_log(q: QIndex | float, xi: float | FloatArray) -> float | FloatArray:
    """q-對數 L_q(ξ) = (ξ^{1−q} − 1)/(1 − q)，q = 1 時為 log ξ。

    以 expm1((1−q)·log ξ)/(1−q) 計算，避免 q 接近 1 時的消去誤差。

    Args:
        q: 指標 q ∈ [0, 1]
        xi: 正實數或正實數陣列

    Returns:
        與輸入同形的 L_q(ξ)

    Raises:
        DomainError: ξ ≤ 0
    """
    value = _as_q(q)
    arr = np.asarray(xi, dtype=np.float64)
    if np.any(~(arr > 0.0)):
        raise DomainError(f'q_log 需要 ξ > 0，收到最小值 {float(np.min(arr))}')
    one_minus = 1.0 - value
    if abs(one_minus) < _Q_ONE_SWITCH:
        result = np.log(arr)
    else:
        result = np.expm1(one_minus * np.log(arr)) / one_minus
    if isinstance(xi, np.ndarray):
        return result
    return float(result)


@overload
def q_exp(q: QIndex | float, x: float) -> float: ...
@overload
def q_exp(q: QIndex | float, x: FloatArray) -> FloatArray: ...
def q_exp(q: QIndex | float, x: float | FloatArray) -> float | FloatArray:
    """q-指數 E_q(x) = [1 + (1−q)x]^{1/(1−q)}，為 q_log 的反函數。

    Raises:
        DomainError: x ≤ ℓ_q，例外帶有 floor = ℓ_q
    """
    value = _as_q(q)
    floor = ell_q(value)
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr > floor)):
        raise DomainError(
            f'q_exp 需要 x > ℓ_q = {floor}，收到最小值 {float(np.min(arr))}', floor=floor
        )
    one_minus = 1.0 - value
    if abs(one_minus) < _Q_ONE_SWITCH:
        result = np.exp(arr)
    else:
        result = np.exp(np.log1p(one_minus * arr) / one_minus)
    if isinstance(x, np.ndarray):
        return result
    return float(result)


# --- α-平均 ---


def _weights(mu: FloatArray) -> tuple[FloatArray, FloatArray]:
    """(a 的權重, b 的權重)，兩者都由 ≥ ½ 的那個權重導出。

    1 − w 在 w ∈ [½, 1] 時沒有捨入，交換 (a, b, μ) 與 (b, a, 1 − μ) 得到位元相同的權重。
    """
    upper = mu >= 0.5
    large = np.where(upper, mu, 1.0 - mu)
    small = 1.0 - large
    return np.where(upper, small, large), np.where(upper, large, small)


def _alpha_mean_core(alpha: float, a: FloatArray, b: FloatArray, mu: FloatArray) -> FloatArray:
    if alpha == math.inf:
        return np.maximum(a, b)
    if alpha == -math.inf:
        return np.minimum(a, b)

    w_a, w_b = _weights(mu)
    has_zero = (a == 0.0) | (b == 0.0)
    safe_a = np.where(has_zero, 1.0, a)
    safe_b = np.where(has_zero, 1.0, b)

    if alpha == 0.0:
        # 對數空間計算幾何平均
        mean = np.exp(w_a * np.log(safe_a) + w_b * np.log(safe_b))
        return np.where(has_zero, 0.0, mean)

    if alpha < 0.0:
        mean = (w_a * safe_a**alpha + w_b * safe_b**alpha) ** (1.0 / alpha)
        return np.where(has_zero, 0.0, mean)

    return (w_a * a**alpha + w_b * b**alpha) ** (1.0 / alpha)


@overload
def alpha_mean(alpha: AlphaIndex | float, a: float, b: float, mu: float) -> float: ...
@overload
def alpha_mean(
    alpha: AlphaIndex | float,
    a: FloatArray,
    b: FloatArray,
    mu: float | FloatArray,
) -> FloatArray: ...
def alpha_mean(
    alpha: AlphaIndex | float,
    a: float | FloatArray,
    b: float | FloatArray,
    mu: float | FloatArray,
) -> float | FloatArray:
    """α-加權平均 M_α(a, b; μ)。

    - α = ±∞：max / min
    - α = 0：a^{1−μ} b^μ（對數空間）
    - 其他：[(1−μ)a^α + μb^α]^{1/α}
    - α < 0 且 a·b = 0：0

    Args:
        alpha: 平均指標
        a: 非負實數（或陣列）
        b: 非負實數（或陣列）
        mu: 權重，必須位於 (0, 1)

    Raises:
        DomainError: μ 不在 (0, 1) 或 a、b 為負
    """
    value = _as_alpha(alpha)
    arr_a = np.asarray(a, dtype=np.float64)
    arr_b = np.asarray(b, dtype=np.float64)
    arr_mu = np.asarray(mu, dtype=np.float64)
    if np.any(~((arr_mu > 0.0) & (arr_mu < 1.0))):
        raise DomainError(f'μ 必須位於 (0, 1): {mu}')
    if np.any(arr_a < 0.0) or np.any(arr_b < 0.0):
        raise DomainError('α-平均只接受非負值')

    with np.errstate(divide='ignore', over='ignore'):
        result = _alpha_mean_core(value, arr_a, arr_b, arr_mu)

    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) or isinstance(mu, np.ndarray):
        return np.asarray(result, dtype=np.float64)
    return float(result)
