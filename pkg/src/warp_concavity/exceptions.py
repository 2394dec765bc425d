"""數值驗證通用例外模組。

定義與求解器無關的例外類別，讓 pipeline 與 CLI 能以單一基底類別統一處理失敗。
"""

from __future__ import annotations


class WarpConcavityError(Exception):
    """warp_concavity 基礎例外。"""


class DomainError(WarpConcavityError, ValueError):
    """引數超出定義域（r ≤ 0、ξ ≤ 0、x ≤ ℓ_q、t ≤ 0 等）。

    Attributes:
        floor: 若為 q-指數的定義域下界錯誤，記錄 ℓ_q；其他情況為 None
    """

    def __init__(self, message: str, *, floor: float | None = None) -> None:
        super().__init__(message)
        self.floor = floor


class BracketError(WarpConcavityError):
    """射擊法或特徵值的初始區間內找不到變號。"""


class SolverFailureError(WarpConcavityError):
    """迭代達到上限仍未收斂。"""


class ContractViolationError(WarpConcavityError):
    """呼叫端違反前置條件（F < 0、γ = 1 未走特徵值路徑、缺少 α 等）。"""


class StiffnessError(WarpConcavityError):
    """顯式非線性子步驟破壞正值性，呼叫端應減半 dt。"""


class UnsupportedError(WarpConcavityError):
    """不支援的組合（比較球半徑超出 r_K、核函數維度不支援等）。"""


class StageError(WarpConcavityError):
    """情境 pipeline 某一階段失敗。

    Attributes:
        stage: 失敗的階段名稱（conditions / solve / certify / thresholds / emit）
        cause: 原始例外
    """

    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f'階段 {stage} 失敗: {type(cause).__name__}: {cause}')
        self.stage = stage
        self.cause = cause
