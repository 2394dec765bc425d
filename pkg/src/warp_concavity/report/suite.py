"""內建驗收套件。

固定的一組桌面規模情境，以 asyncio.gather 搭配 ProcessPoolExecutor 平行執行。
每個情境在子程序內完成求解與輸出，主程序只彙整摘要。
"""

from __future__ import annotations

import asyncio
import logging
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path
from typing import Any

from warp_concavity.exceptions import StageError, WarpConcavityError
from warp_concavity.report.emit import dump_json, emit
from warp_concavity.report.pipeline import run_scenario
from warp_concavity.report.scenario import ScenarioConfig, parse_scenario
from warp_concavity.types import ReportFormat

logger = logging.getLogger(__name__)

SUITE_SUMMARY = 'suite_summary.json'


def _scenario(
    name: str, geometry: dict[str, Any], problem: dict[str, Any], **extra: Any
) -> dict[str, Any]:
    return {'config_version': 1, 'name': name, 'geometry': geometry, 'problem': problem, **extra}


def _space_form(n: int, radius: float, k: float) -> dict[str, Any]:
    return {'N': n, 'R': radius, 'factor': {'kind': 'space_form', 'K': k}}


def builtin_scenarios(seed: int = 0) -> list[ScenarioConfig]:
    """涵蓋各項驗收條件的情境清單。"""
    certification = {'seed': seed}
    raw: list[dict[str, Any]] = []

    for k in (0.0, -1.0):
        for n in (2, 3):
            for gamma in (0.0, 0.5):
                raw.append(
                    _scenario(
                        f'power-K{k:g}-N{n}-g{gamma:g}',
                        _space_form(n, 1.0, k),
                        {'kind': 'elliptic', 'lambda': 1.0, 'gamma': gamma},
                        certification=certification,
                    )
                )
            for radius in (0.5, 1.0):
                raw.append(
                    _scenario(
                        f'eigen-K{k:g}-N{n}-R{radius:g}',
                        _space_form(n, radius, k),
                        {'kind': 'eigen'},
                        alphas=[0.0, 'auto'],
                        certification=certification,
                    )
                )
    raw.append(
        _scenario(
            'eigen-cubic-0.1',
            {'N': 2, 'R': 1.0, 'factor': {'kind': 'cubic_perturbed', 'c': 0.1}},
            {'kind': 'eigen'},
            alphas=['auto'],
            certification=certification,
        )
    )
    raw.append(
        _scenario(
            'heat-bump-K-1-N2',
            _space_form(2, 1.0, -1.0),
            {'kind': 'parabolic', 'initial': 'bump', 't_end': 10.0},
            alphas=[0.0],
            certification=certification,
        )
    )
    raw.append(
        _scenario(
            'heat-ring-K-1-N2',
            _space_form(2, 1.0, -1.0),
            {'kind': 'parabolic', 'initial': 'ring', 't_end': 10.0},
            alphas=[0.0],
            certification=certification,
        )
    )
    raw.append(
        _scenario(
            'steady-torsion-N3',
            _space_form(3, 1.0, 0.0),
            {
                'kind': 'parabolic',
                'nonlinearity': 'power_source',
                'lambda': 1.0,
                'exponent': 0.0,
                'initial': 'zero',
                'steady': True,
            },
            alphas=[1.0],
            certification=certification,
        )
    )
    for k in (0.0, -1.0):
        for n in (2, 3, 5):
            raw.append(
                _scenario(
                    f'kernel-K{k:g}-N{n}',
                    _space_form(n, 1.0, k),
                    {'kind': 'heat_kernel', 'times': [0.5, 1.0]},
                    certification=certification,
                )
            )
    return [parse_scenario(data) for data in raw]


def _run_one(data: dict[str, Any], out_dir: str, formats: list[ReportFormat]) -> dict[str, Any]:
    """子程序入口：執行並輸出單一情境，回傳摘要。"""
    config = parse_scenario(data)
    try:
        bundle = run_scenario(config)
        emit(bundle, out_dir, formats)
    except StageError as exc:
        return {'name': config.name, 'exit_code': 1, 'stage': exc.stage, 'error': str(exc)}
    except (WarpConcavityError, OSError) as exc:
        return {'name': config.name, 'exit_code': 1, 'stage': 'emit', 'error': str(exc)}
    summary = bundle.summary()
    return {
        'name': config.name,
        'exit_code': bundle.exit_code,
        'scenario_hash': bundle.scenario_hash,
        'tags': summary['tags'],
    }


async def _run_all(
    configs: list[ScenarioConfig], out_dir: str, formats: list[ReportFormat], jobs: int
) -> list[dict[str, Any]]:
    loop = asyncio.get_running_loop()
    executor: Executor
    if jobs > 1:
        executor = ProcessPoolExecutor(max_workers=jobs)
    else:
        executor = ThreadPoolExecutor(max_workers=1)
    with executor:
        tasks = [
            loop.run_in_executor(executor, _run_one, c.model_dump(by_alias=True), out_dir, formats)
            for c in configs
        ]
        return list(await asyncio.gather(*tasks))


def run_suite(
    configs: list[ScenarioConfig],
    out_dir: str | Path,
    formats: list[ReportFormat],
    jobs: int = 1,
) -> dict[str, Any]:
    """平行執行情境並寫出 suite_summary.json。

    Returns:
        {'exit_code': 最嚴重的結束碼, 'scenarios': {名稱: 摘要}}
    """
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    results = asyncio.run(_run_all(configs, str(target), formats, max(1, jobs)))
    # 1（執行錯誤）優先於 2（違反）
    codes = {r['exit_code'] for r in results}
    exit_code = 1 if 1 in codes else 2 if 2 in codes else 0
    summary = {
        'exit_code': exit_code,
        'scenarios': {r['name']: r for r in sorted(results, key=lambda r: r['name'])},
    }
    dump_json(target / SUITE_SUMMARY, summary)
    logger.info('驗收套件完成', extra={'scenarios': len(results), 'exit_code': exit_code})
    return summary
