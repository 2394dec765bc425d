"""數值驗證統一配置模組。

提供求解器、幾何與凹性認證的預設參數，以及 CLI 可用的環境變數覆寫。
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

# 預設值
DEFAULT_GRID_SIZE = 4096
DEFAULT_TOL = 1e-8
DEFAULT_DT = 1e-3
DEFAULT_T_MAX = 1e3

DEFAULT_CONDITION_GRID = 2048
DEFAULT_GEODESIC_STEPS = 4096
DEFAULT_SHOOTING_STEPS = 512
DEFAULT_COARSE_ANGLES = 64

DEFAULT_BOUNDARY_CUT_FRACTION = 1.0 / 64.0
DEFAULT_EPSILON = 1e-8
DEFAULT_N_PAIRS = 200
DEFAULT_N_PARAMS = 9
DEFAULT_SEED = 0

DEFAULT_OUT_DIR = 'warp-results'
DEFAULT_JOBS = 1

# 僅允許這兩個鍵由環境變數覆寫
OUT_DIR_ENV = 'WARP_CONCAVITY_OUT_DIR'
JOBS_ENV = 'WARP_CONCAVITY_JOBS'


@dataclass
class SolverSettings:
    """橢圓與拋物型求解器配置。

    Attributes:
        grid_size: 徑向網格區間數 M（網格點 r_0..r_M）
        tol: 射擊法與穩態判定容許誤差
        dt: Crank–Nicolson 時間步長
        t_max: 穩態迭代的最長模擬時間
    """

    grid_size: int = DEFAULT_GRID_SIZE
    tol: float = DEFAULT_TOL
    dt: float = DEFAULT_DT
    t_max: float = DEFAULT_T_MAX


@dataclass
class GeometrySettings:
    """幾何條件檢查與測地線積分配置。

    Attributes:
        condition_grid: 條件檢查的均勻網格點數
        geodesic_steps: 測地線最終積分的 RK4 步數
        shooting_steps: 連接測地線射擊時每條試射曲線的步數
        coarse_angles: 粗掃描的發射角數
    """

    condition_grid: int = DEFAULT_CONDITION_GRID
    geodesic_steps: int = DEFAULT_GEODESIC_STEPS
    shooting_steps: int = DEFAULT_SHOOTING_STEPS
    coarse_angles: int = DEFAULT_COARSE_ANGLES


@dataclass
class CertificationSettings:
    """凹性認證配置。

    Attributes:
        boundary_cut_fraction: 邊界帶寬 δ 相對於 R 的比例
        epsilon: 嚴格性餘裕的相對係數
        n_pairs: 測地線抽樣端點對數
        n_params: 每條測地線的內部參數數
        seed: 低差異序列的亂數種子
    """

    boundary_cut_fraction: float = DEFAULT_BOUNDARY_CUT_FRACTION
    epsilon: float = DEFAULT_EPSILON
    n_pairs: int = DEFAULT_N_PAIRS
    n_params: int = DEFAULT_N_PARAMS
    seed: int = DEFAULT_SEED


@dataclass
class WarpConcavityConfig:
    """整體配置。"""

    solver: SolverSettings = field(default_factory=SolverSettings)
    geometry: GeometrySettings = field(default_factory=GeometrySettings)
    certification: CertificationSettings = field(default_factory=CertificationSettings)


def get_out_dir(explicit: str | None = None) -> Path:
    """取得輸出目錄，優先使用明確指定的值，其次為環境變數 WARP_CONCAVITY_OUT_DIR。

    Args:
        explicit: 命令列指定的目錄（可選）

    Returns:
        輸出目錄路徑
    """
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))


def get_jobs(explicit: int | None = None) -> int:
    """取得平行工作數，優先使用明確指定的值，其次為環境變數 WARP_CONCAVITY_JOBS。

    Args:
        explicit: 命令列指定的工作數（可選）

    Returns:
        至少為 1 的工作數

    Raises:
        ValueError: 環境變數不是整數
    """
    if explicit is not None:
        return max(1, explicit)
    raw = os.environ.get(JOBS_ENV)
    if raw is None or raw.strip() == '':
        return DEFAULT_JOBS
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ValueError(f'{JOBS_ENV} 必須為整數: {raw!r}') from exc
