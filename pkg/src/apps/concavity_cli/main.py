"""warp-concavity 命令列入口。

用法：
    warp-concavity run --config scenario.toml [--out DIR] [--format csv,json,svg]
    warp-concavity suite [--seed 0] [--jobs 4]
    warp-concavity conditions|solve-elliptic|eigen|solve-parabolic|heat-kernel|thresholds
        --config scenario.toml
    warp-concavity certify --config scenario.toml [--profile profile.csv] [--alpha 0.5]

結束碼：0 = 全部通過、2 = 至少一項 violated、1 = 執行錯誤。
"""

from __future__ import annotations

import argparse
import json
import logging
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, TypeVar, cast, get_args

from dotenv import load_dotenv

from warp_concavity.concavity import certify, combine_verdicts
from warp_concavity.config import get_jobs, get_out_dir
from warp_concavity.elliptic.eigen import first_eigenpair
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.elliptic.shooting import solve_power_bvp
from warp_concavity.exceptions import ContractViolationError, StageError, WarpConcavityError
from warp_concavity.geometry.conditions import check_condition
from warp_concavity.heat_kernel import KernelSpec, kernel_log_concavity, kernel_mass
from warp_concavity.parabolic import evolve, geometric_times, steady_state
from warp_concavity.report.emit import (
    emit,
    read_profile_csv,
    write_evolution_csv,
    write_profile_csv,
)
from warp_concavity.report.pipeline import build_nonlinearity, initial_profile, run_scenario
from warp_concavity.report.scenario import (
    EigenProblem,
    EllipticProblem,
    HeatKernelProblem,
    ParabolicProblem,
    ScenarioConfig,
    SpaceFormModel,
    load_scenario,
)
from warp_concavity.report.suite import builtin_scenarios, run_suite
from warp_concavity.thresholds import (
    alpha_threshold,
    cheng_check,
    threshold_curvature_estimate,
)
from warp_concavity.types import ReportFormat, Verdict

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2


# =============================================================================
# 共用
# =============================================================================


def _print_json(payload: Any) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, default=float)
    print(text)  # noqa: T201


def _parse_formats(raw: str | None) -> list[ReportFormat] | None:
    if raw is None:
        return None
    allowed = get_args(ReportFormat)
    formats = [part.strip() for part in raw.split(',') if part.strip()]
    unknown = [f for f in formats if f not in allowed]
    if unknown:
        raise ContractViolationError(f'不支援的輸出格式: {", ".join(unknown)}')
    return cast(list[ReportFormat], formats)


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    """讀取 --config，並套用 --seed 覆寫。"""
    if not args.config:
        raise ContractViolationError(f'{args.command} 需要 --config')
    config = load_scenario(args.config)
    if args.seed is not None:
        certification = config.certification.model_copy(update={'seed': args.seed})
        config = config.model_copy(update={'certification': certification})
    return config


def _scenario_dir(args: argparse.Namespace, config: ScenarioConfig) -> Path:
    out = get_out_dir(args.out or config.outputs.directory)
    target = out / config.name
    target.mkdir(parents=True, exist_ok=True)
    return target


P = TypeVar('P')


def _require(config: ScenarioConfig, kind: type[P]) -> P:
    problem = config.problem
    if not isinstance(problem, kind):
        raise ContractViolationError(
            f'情境 {config.name} 的問題種類為 {problem.kind}，此子命令不適用'
        )
    return problem


def _verdict_code(verdicts: list[Verdict]) -> int:
    return EXIT_VIOLATED if combine_verdicts(verdicts) == 'violated' else EXIT_OK


# =============================================================================
# 子命令
# =============================================================================


def _cmd_conditions(args: argparse.Namespace) -> int:
    config = _load_config(args)
    ball = config.geometry.to_ball()
    reports = [check_condition(ball, 'C2-necessary'), check_condition(ball, 'Eq13')]
    alphas = config.numeric_alphas
    reports.extend(check_condition(ball, 'Eq11', alpha=a) for a in alphas)
    interior = [a for a in alphas if 0.0 < a < 1.0]
    if interior:
        lambda1 = first_eigenpair(ball, config.solver.tol, config.solver.grid_size).lambda1
        reports.extend(
            check_condition(ball, 'Eq12', alpha=a, lambda1=lambda1) for a in interior
        )
    _print_json([r.to_dict() for r in reports])
    return EXIT_OK


def _cmd_solve_elliptic(args: argparse.Namespace) -> int:
    config = _load_config(args)
    problem = _require(config, EllipticProblem)
    ball = config.geometry.to_ball()
    profile = solve_power_bvp(
        ball, problem.lam, problem.gamma, config.solver.tol, config.solver.grid_size
    )
    alpha = (config.numeric_alphas or [1.0 - problem.gamma])[0]
    path = write_profile_csv(_scenario_dir(args, config) / 'profile_solution.csv', profile, alpha)
    _print_json({'profile': profile.to_dict(), 'csv': str(path)})
    return EXIT_OK


def _cmd_eigen(args: argparse.Namespace) -> int:
    config = _load_config(args)
    ball = config.geometry.to_ball()
    solution = first_eigenpair(ball, config.solver.tol, config.solver.grid_size)
    path = write_profile_csv(
        _scenario_dir(args, config) / 'profile_eigenfunction.csv', solution.profile, 0.0
    )
    _print_json({**solution.to_dict(), 'csv': str(path)})
    return EXIT_OK


def _cmd_solve_parabolic(args: argparse.Namespace) -> int:
    config = _load_config(args)
    problem = _require(config, ParabolicProblem)
    ball = config.geometry.to_ball()
    solver = config.solver
    target = _scenario_dir(args, config)

    if problem.steady:
        profile = steady_state(
            ball, problem.lam, problem.exponent, solver.tol, solver.grid_size, solver.t_max
        )
        path = write_profile_csv(target / 'profile_steady.csv', profile, 1.0 - problem.exponent)
        _print_json({'profile': profile.to_dict(), 'csv': str(path)})
        return EXIT_OK

    nl = build_nonlinearity(problem)
    initial = initial_profile(ball, problem.initial, solver.grid_size, solver.tol)
    times = problem.sample_times or geometric_times(problem.t_end)
    states = evolve(ball, nl, initial, problem.t_end, solver.dt, times)
    alpha = (config.numeric_alphas or [0.0])[0]
    path = write_evolution_csv(target / 'evolution_evolution.csv', states, alpha)
    _print_json({'states': [s.to_dict() for s in states], 'csv': str(path)})
    return EXIT_OK


def _cmd_heat_kernel(args: argparse.Namespace) -> int:
    config = _load_config(args)
    problem = _require(config, HeatKernelProblem)
    factor = config.geometry.factor
    assert isinstance(factor, SpaceFormModel)
    cert = config.certification
    results: dict[str, Any] = {}
    verdicts: list[Verdict] = []
    for t in problem.times:
        spec = KernelSpec(config.geometry.N, factor.K, t)
        certificate = kernel_log_concavity(
            spec, problem.box_radius, cert.n_pairs, cert.n_params, seed=cert.seed
        ).with_hash(config.scenario_hash())
        verdicts.append(certificate.verdict)
        results[f'{t:.6g}'] = {
            'mass': kernel_mass(spec),
            'certificate': certificate.to_dict(),
        }
    _print_json(results)
    return _verdict_code(verdicts)


def _profile_for_certify(args: argparse.Namespace, config: ScenarioConfig) -> RadialProfile:
    """--profile 給定時讀入 CSV，否則依情境求解。"""
    ball = config.geometry.to_ball()
    solver = config.solver
    if args.profile:
        columns = read_profile_csv(args.profile)
        grid = columns['r']
        if abs(grid[-1] - ball.radius) > 1e-12 * ball.radius:
            raise ContractViolationError(
                f'CSV 網格終點 {grid[-1]} 與情境半徑 {ball.radius} 不符'
            )
        values = columns['v']
        return RadialProfile(
            grid=grid, values=values, ball=ball, problem='csv', residual=float(values[-1])
        )
    problem = config.problem
    if isinstance(problem, EllipticProblem):
        return solve_power_bvp(ball, problem.lam, problem.gamma, solver.tol, solver.grid_size)
    if isinstance(problem, EigenProblem):
        return first_eigenpair(ball, solver.tol, solver.grid_size).profile
    if isinstance(problem, ParabolicProblem) and problem.steady:
        return steady_state(
            ball, problem.lam, problem.exponent, solver.tol, solver.grid_size, solver.t_max
        )
    raise ContractViolationError('certify 需要 --profile，或 elliptic / eigen / steady 情境')


def _cmd_certify(args: argparse.Namespace) -> int:
    config = _load_config(args)
    profile = _profile_for_certify(args, config)
    alphas = list(args.alpha) if args.alpha else config.numeric_alphas
    if not alphas:
        raise ContractViolationError('certify 需要 --alpha 或情境中的數值 alphas')
    settings = config.settings()
    cert = settings.certification
    scenario_hash = config.scenario_hash()
    results: dict[str, Any] = {}
    verdicts: list[Verdict] = []
    for alpha in alphas:
        certificate = certify(
            profile,
            alpha,
            method=config.certification.method,
            boundary_cut=cert.boundary_cut_fraction * profile.radius,
            epsilon=cert.epsilon,
            n_pairs=cert.n_pairs,
            n_params=cert.n_params,
            seed=cert.seed,
            settings=settings.geometry,
        ).with_hash(scenario_hash)
        verdicts.append(certificate.verdict)
        results[f'alpha={alpha:.6g}'] = certificate.to_dict()
    _print_json(results)
    return _verdict_code(verdicts)


def _cmd_thresholds(args: argparse.Namespace) -> int:
    config = _load_config(args)
    ball = config.geometry.to_ball()
    solver = config.solver
    solution = first_eigenpair(ball, solver.tol, solver.grid_size)
    report = alpha_threshold(ball, solution.lambda1)
    cheng = cheng_check(ball, solver.tol, solver.grid_size, lambda1=solution.lambda1)
    estimate = threshold_curvature_estimate(ball, solver.tol, solver.grid_size)
    _print_json(
        {
            'threshold': report.with_cheng(cheng.holds).to_dict(),
            'cheng': cheng.to_dict(),
            'curvature_estimate': estimate,
        }
    )
    ok = cheng.holds and report.admissible and report.A <= estimate * (1.0 + 1e-6)
    return EXIT_OK if ok else EXIT_VIOLATED


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    formats = _parse_formats(args.format) or config.outputs.formats
    bundle = run_scenario(config)
    emit(bundle, get_out_dir(args.out or config.outputs.directory), formats)
    _print_json(bundle.summary())
    return bundle.exit_code


def _cmd_suite(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    formats = _parse_formats(args.format) or ['csv', 'json']
    configs = builtin_scenarios(seed)
    summary = run_suite(configs, get_out_dir(args.out), formats, get_jobs(args.jobs))
    _print_json(summary)
    return int(summary['exit_code'])


_COMMANDS: dict[str, tuple[Callable[[argparse.Namespace], int], str]] = {
    'conditions': (_cmd_conditions, '檢查幾何條件'),
    'solve-elliptic': (_cmd_solve_elliptic, '求解 −Δu = λu^γ'),
    'eigen': (_cmd_eigen, '求第一 Dirichlet 特徵對'),
    'solve-parabolic': (_cmd_solve_parabolic, '推進拋物型問題或求穩態'),
    'heat-kernel': (_cmd_heat_kernel, '熱核質量與對數凹性'),
    'certify': (_cmd_certify, '認證徑向解的 α-凹性'),
    'thresholds': (_cmd_thresholds, 'α 門檻與 Cheng 比較'),
    'run': (_cmd_run, '執行完整情境並輸出報告'),
    'suite': (_cmd_suite, '執行內建驗收套件'),
}


# =============================================================================
# 入口
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='TOML 情境檔')
    common.add_argument('--out', help='輸出目錄（預設取 WARP_CONCAVITY_OUT_DIR）')
    common.add_argument('--seed', type=int, help='覆寫認證取樣的種子')
    common.add_argument('--format', help='輸出格式，逗號分隔：csv,json,svg')
    common.add_argument('--jobs', type=int, help='平行工作數（預設取 WARP_CONCAVITY_JOBS）')
    common.add_argument('--verbose', '-v', action='store_true', help='DEBUG 等級日誌')

    parser = argparse.ArgumentParser(
        prog='warp-concavity', description='旋轉對稱球上 α-凹性的數值驗證'
    )
    sub = parser.add_subparsers(dest='command', required=True)
    for name, (_, help_text) in _COMMANDS.items():
        command = sub.add_parser(name, parents=[common], help=help_text)
        if name == 'certify':
            command.add_argument('--profile', help='由 write_profile_csv 產生的 CSV')
            command.add_argument(
                '--alpha', type=float, action='append', help='要認證的 α，可重複'
            )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """CLI 入口，回傳結束碼。"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    handler, _ = _COMMANDS[args.command]
    try:
        return handler(args)
    except StageError as exc:
        logger.error('情境執行失敗', extra={'stage': exc.stage, 'error': str(exc)})
        _print_json({'error': str(exc), 'stage': exc.stage})
        return EXIT_ERROR
    except (WarpConcavityError, OSError, ValueError) as exc:
        logger.error('命令執行失敗', extra={'command': args.command, 'error': str(exc)})
        _print_json({'error': str(exc), 'command': args.command})
        return EXIT_ERROR


if __name__ == '__main__':
    raise SystemExit(main())
