"""共用型別定義。

集中 Literal 別名與序列化用的 TypedDict，報告、證書與 CLI 共用。
"""

from __future__ import annotations

import sys
from typing import Literal

if sys.version_info >= (3, 11):
    from typing import NotRequired, TypedDict
else:  # pragma: no cover
    from typing_extensions import NotRequired, TypedDict

# --- 列舉型別 ---

FactorKind = Literal['space_form', 'cubic_perturbed', 'tabulated']
ConditionId = Literal['C2-necessary', 'Eq11', 'Eq12', 'Eq13']
Verdict = Literal['certified_strict', 'certified_weak', 'violated']
CertificationMethod = Literal['radial', 'geodesic', 'both']
NonlinearityKind = Literal['absorption', 'power_absorption', 'power_source']
TheoremTag = Literal[
    'T1.1', 'T1.2', 'T1.3', 'T3.1', 'C1.1', 'C1.2', 'C1.3', 'C4.1', 'CA.1', 'CA.2', 'PA.2'
]
TagVerdict = Literal['certified_strict', 'certified_weak', 'violated', 'not_run']
ReportFormat = Literal['csv', 'json', 'svg']


# --- 序列化紀錄 ---


class GeodesicGap(TypedDict):
    """單一測地線抽樣點的 α-平均不等式紀錄。"""

    p: tuple[float, float]
    q: tuple[float, float]
    t: float
    lhs: float
    rhs: float
    gap: float


class ConditionReportDict(TypedDict):
    """幾何條件檢查結果。"""

    condition: ConditionId
    alpha: float | None
    lambda1: float | None
    holds: bool
    worst_margin: float
    worst_radius: float


class CertificateDict(TypedDict):
    """凹性證書。"""

    alpha: float
    method: CertificationMethod
    verdict: Verdict
    radial_margins: tuple[float, float] | None
    boundary_cut: float
    epsilon: float
    worst_gap: float | None
    interpolation_error: float
    skipped_parameters: int
    log_space: bool
    geodesic_results: list[GeodesicGap]
    scenario_hash: NotRequired[str]


class ThresholdDict(TypedDict):
    """α 門檻報告。"""

    A: float
    lambda1_used: float
    inf_point: float
    curvature_bounds: tuple[float, float]
    cheng_ok: bool | None
    admissible: bool
    alternative_A: float
