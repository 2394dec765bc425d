"""全域測試設定。"""

from __future__ import annotations

import pytest
from dotenv import load_dotenv

from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.factor import CubicPerturbedFactor, space_form_factor

# 載入 .env，確保測試時也能讀取 WARP_CONCAVITY_* 覆寫
load_dotenv()


def pytest_addoption(parser: pytest.Parser) -> None:
    """新增自訂命令列參數。"""
    parser.addoption(
        '--run-slow',
        action='store_true',
        default=False,
        help='執行桌面規模的完整驗收測試（耗時較長）',
    )


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    """根據命令列參數決定是否跳過 slow test。"""
    if config.getoption('--run-slow'):
        return

    skip_slow = pytest.mark.skip(reason='需要加 --run-slow 才會執行')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


# --- 共用的球 ---


@pytest.fixture
def euclidean_ball() -> Ball:
    """K = 0、N = 3、R = 1。"""
    return Ball(3, 1.0, space_form_factor(0.0))


@pytest.fixture
def euclidean_disk() -> Ball:
    """K = 0、N = 2、R = 1。"""
    return Ball(2, 1.0, space_form_factor(0.0))


@pytest.fixture
def hyperbolic_disk() -> Ball:
    """K = −1、N = 2、R = 1。"""
    return Ball(2, 1.0, space_form_factor(-1.0))


@pytest.fixture
def cubic_disk() -> Ball:
    """σ(r) = r + 0.1r³、N = 2、R = 1。"""
    return Ball(2, 1.0, CubicPerturbedFactor(0.1))
