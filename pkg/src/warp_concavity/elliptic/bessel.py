"""Bessel 函數 J_a 的第一個正零點。"""

from __future__ import annotations

import logging
from functools import lru_cache

from scipy.optimize import brentq
from scipy.special import jv

from warp_concavity.exceptions import DomainError

logger = logging.getLogger(__name__)

# 相鄰零點間距接近 π，以 0.25 掃描不會跳過變號
_SCAN_STEP = 0.25


@lru_cache(maxsize=128)
def bessel_first_zero(order: float) -> float:
    """回傳 j_a：J_a 的第一個正零點。

    J_a 在 (0, j_a) 上為正且 j_a > a，因此從 max(a, 0.5) 開始向右掃描變號，
    再以 brentq 細化（xtol 1e-14）。

    Raises:
        DomainError: a < 0
    """
    a = float(order)
    if a < 0.0:
        raise DomainError(f'Bessel 階數必須 ≥ 0: {a}')

    lo = max(a, 0.5)
    f_lo = float(jv(a, lo))
    hi = lo + _SCAN_STEP
    f_hi = float(jv(a, hi))
    while f_lo * f_hi > 0.0:
        lo, f_lo = hi, f_hi
        hi = lo + _SCAN_STEP
        f_hi = float(jv(a, hi))

    root = float(brentq(lambda x: float(jv(a, x)), lo, hi, xtol=1e-14, rtol=1e-15))
    logger.debug('Bessel 零點', extra={'order': a, 'zero': root})
    return root
