"""報告輸出：CSV、JSON 與 SVG。

CSV 以 '%.17g' 寫出，重新讀入可逐位元重現；JSON 以 sort_keys 寫出，
相同設定與種子產生位元組相同的檔案。SVG 只是附帶的圖，不影響判定。
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from matplotlib.figure import Figure
from numpy.typing import NDArray

from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.parabolic import EvolutionState
from warp_concavity.power_means import q_log
from warp_concavity.report.pipeline import ReportBundle
from warp_concavity.types import ReportFormat

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

PROFILE_COLUMNS = ('r', 'v', 'w', 'w1', 'w2')
EVOLUTION_COLUMNS = ('t', *PROFILE_COLUMNS)
_FLOAT_FORMAT = '%.17g'


# =============================================================================
# CSV
# =============================================================================


def profile_table(profile: RadialProfile, alpha: float) -> FloatArray:
    """r, v, w, w', w'' 五欄；v ≤ 0 的點 w 與導數為 NaN。"""
    v = profile.values
    h = profile.step
    positive = v > 0.0
    w = np.full_like(v, np.nan)
    w[positive] = q_log(1.0 - alpha, v[positive])
    w1 = np.full_like(v, np.nan)
    w2 = np.full_like(v, np.nan)
    w1[1:-1] = (w[2:] - w[:-2]) / (2.0 * h)
    w2[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / (h * h)
    if positive[0]:
        w1[0] = 0.0
        w2[0] = 2.0 * (w[1] - w[0]) / (h * h)
    return np.column_stack([profile.grid, v, w, w1, w2])


def write_profile_csv(path: Path, profile: RadialProfile, alpha: float) -> Path:
    np.savetxt(
        path,
        profile_table(profile, alpha),
        fmt=_FLOAT_FORMAT,
        delimiter=',',
        header=','.join(PROFILE_COLUMNS),
        comments='',
    )
    return path


def write_evolution_csv(path: Path, states: Sequence[EvolutionState], alpha: float) -> Path:
    blocks = []
    for state in states:
        table = profile_table(state.profile, alpha)
        blocks.append(np.column_stack([np.full(table.shape[0], state.t), table]))
    np.savetxt(
        path,
        np.vstack(blocks),
        fmt=_FLOAT_FORMAT,
        delimiter=',',
        header=','.join(EVOLUTION_COLUMNS),
        comments='',
    )
    return path


def read_profile_csv(path: str | Path) -> dict[str, FloatArray]:
    """讀回 write_profile_csv / write_evolution_csv 的輸出，依欄名回傳。"""
    with Path(path).open(encoding='utf-8') as fh:
        header = fh.readline().strip().split(',')
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    return {name: data[:, i].copy() for i, name in enumerate(header)}


# =============================================================================
# JSON
# =============================================================================


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.generic):
        return _json_safe(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dump_json(path: Path, payload: Any) -> Path:
    text = json.dumps(_json_safe(payload), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + '\n', encoding='utf-8')
    return path


# =============================================================================
# SVG
# =============================================================================


def _plot_profile(path: Path, name: str, profile: RadialProfile, alpha: float) -> Path:
    table = profile_table(profile, alpha)
    fig = Figure(figsize=(12, 3.5))
    axes = fig.subplots(1, 3)
    labels = ('v', f'w = L_{{{1.0 - alpha:g}}}(v)', "w''")
    for ax, column, label in zip(axes, (1, 2, 4), labels, strict=True):
        ax.plot(table[:, 0], table[:, column])
        ax.set_xlabel('r')
        ax.set_title(label)
    fig.suptitle(name)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    return path


def _plot_gaps(path: Path, name: str, gaps: list[float]) -> Path:
    fig = Figure(figsize=(5, 3.5))
    ax = fig.subplots()
    ax.hist(gaps, bins=40)
    ax.set_xlabel('gap')
    ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    return path


def _safe_name(name: str) -> str:
    return ''.join(c if c.isalnum() or c in '-_.=' else '_' for c in name)


# =============================================================================
# 入口
# =============================================================================


def emit(
    bundle: ReportBundle, out_dir: str | Path, formats: Iterable[ReportFormat]
) -> list[Path]:
    """寫出 bundle 的所有檔案到 out_dir/<情境名稱>/。

    Raises:
        OSError: 目錄無法建立或檔案無法寫入
    """
    wanted = set(formats)
    target = Path(out_dir) / _safe_name(bundle.name)
    target.mkdir(parents=True, exist_ok=True)
    alpha = bundle.primary_alpha
    written: list[Path] = []

    if 'csv' in wanted:
        for name, profile in bundle.profiles.items():
            path = target / f'profile_{_safe_name(name)}.csv'
            written.append(write_profile_csv(path, profile, alpha))
        for name, states in bundle.evolutions.items():
            path = target / f'evolution_{_safe_name(name)}.csv'
            written.append(write_evolution_csv(path, states, alpha))

    if 'json' in wanted:
        certificates = {k: c.to_dict() for k, c in bundle.certificates.items()}
        written.append(dump_json(target / 'certificates.json', certificates))
        written.append(dump_json(target / 'summary.json', bundle.summary()))

    if 'svg' in wanted:
        for name, profile in bundle.profiles.items():
            path = target / f'profile_{_safe_name(name)}.svg'
            written.append(_plot_profile(path, name, profile, alpha))
        for name, states in bundle.evolutions.items():
            path = target / f'evolution_{_safe_name(name)}.svg'
            title = f'{name} t={states[-1].t:g}'
            written.append(_plot_profile(path, title, states[-1].profile, alpha))
        for name, cert in bundle.certificates.items():
            gaps = [r['gap'] for r in cert.geodesic_results]
            if gaps:
                path = target / f'gaps_{_safe_name(name)}.svg'
                written.append(_plot_gaps(path, name, gaps))

    logger.info('報告輸出完成', extra={'scenario': bundle.name, 'files': len(written)})
    return written
