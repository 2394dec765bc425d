"""情境 pipeline：條件檢查 → 求解 → 門檻 → 認證 → 報告。

每個階段的例外都包成 StageError，stage 屬性指出失敗位置。
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, get_args

import numpy as np

from warp_concavity.concavity import (
    ConcavityCertificate,
    certify,
    certify_radial,
    combine_verdicts,
    power_concavity_defect,
    transformed_residual,
)
from warp_concavity.elliptic.eigen import first_eigenpair
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.elliptic.shooting import check_nonlinearity, solve_power_bvp
from warp_concavity.exceptions import StageError, UnsupportedError, WarpConcavityError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.conditions import ConditionReport, check_condition
from warp_concavity.heat_kernel import (
    KernelSpec,
    delta_approximation,
    delta_approximation_error,
    kernel_log_concavity,
    kernel_mass,
)
from warp_concavity.parabolic import (
    EvolutionState,
    Nonlinearity,
    concavity_onset_time,
    evolve,
    geometric_times,
    steady_state,
)
from warp_concavity.report.scenario import (
    EigenProblem,
    EllipticProblem,
    HeatKernelProblem,
    ParabolicProblem,
    ScenarioConfig,
    SpaceFormModel,
)
from warp_concavity.thresholds import (
    ThresholdReport,
    alpha_threshold,
    cheng_check,
    threshold_curvature_estimate,
)
from warp_concavity.types import TagVerdict, TheoremTag, Verdict

logger = logging.getLogger(__name__)

ALL_TAGS: tuple[TheoremTag, ...] = get_args(TheoremTag)


@dataclass
class ReportBundle:
    """單一情境的全部結果。

    Attributes:
        name: 情境名稱
        scenario_hash: 設定的 sha256
        conditions: 幾何條件報告
        profiles: 徑向解（CSV 輸出）
        evolutions: 拋物型時間序列（CSV 含 t 欄）
        certificates: 凹性證書
        thresholds: α 門檻報告
        extras: 其他數值紀錄（質量、殘差、起始時間等）
        tags: 各定理標籤的判定
        primary_alpha: CSV 中 w = L_{1−α}(v) 使用的 α
    """

    name: str
    scenario_hash: str
    conditions: list[ConditionReport] = field(default_factory=lambda: [])
    profiles: dict[str, RadialProfile] = field(default_factory=lambda: {})
    evolutions: dict[str, list[EvolutionState]] = field(default_factory=lambda: {})
    certificates: dict[str, ConcavityCertificate] = field(default_factory=lambda: {})
    thresholds: list[ThresholdReport] = field(default_factory=lambda: [])
    extras: dict[str, Any] = field(default_factory=lambda: {})
    tags: dict[TheoremTag, TagVerdict] = field(
        default_factory=lambda: dict.fromkeys(ALL_TAGS, 'not_run')
    )
    primary_alpha: float = 0.0

    @property
    def exit_code(self) -> int:
        """0 = 全部通過、2 = 至少一項 violated。"""
        if any(v == 'violated' for v in self.tags.values()):
            return 2
        if any(c.verdict == 'violated' for c in self.certificates.values()):
            return 2
        return 0

    def summary(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'scenario_hash': self.scenario_hash,
            'exit_code': self.exit_code,
            'tags': dict(sorted(self.tags.items())),
            'conditions': [c.to_dict() for c in self.conditions],
            'thresholds': [t.to_dict() for t in self.thresholds],
            'verdicts': {k: c.verdict for k, c in sorted(self.certificates.items())},
            'extras': self.extras,
        }


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except (WarpConcavityError, ValueError, FloatingPointError) as exc:
        logger.error('情境階段失敗', extra={'stage': name, 'error': str(exc)})
        raise StageError(name, exc) from exc


def _bool_verdict(ok: bool) -> TagVerdict:
    return 'certified_strict' if ok else 'violated'


# =============================================================================
# 初值
# =============================================================================


def initial_profile(
    ball: Ball, kind: str, grid_size: int, tol: float
) -> RadialProfile:
    """拋物型問題的初值。

    - bump：1 − (r/R)²（對數凹）
    - ring：(r/R)²(1 − (r/R)²)²（非對數凹，原點為零）
    - zero：零函數
    - eigen：v(0) = 1 的第一特徵函數
    """
    if kind == 'eigen':
        eigen = first_eigenpair(ball, tol, grid_size).profile
        values = eigen.values.copy()
        values[-1] = 0.0
        return eigen.with_values(values, problem='initial')
    grid = ball.uniform_grid(grid_size)
    x = grid / ball.radius
    if kind == 'bump':
        values = 1.0 - x * x
    elif kind == 'ring':
        values = x * x * (1.0 - x * x) ** 2
    elif kind == 'zero':
        values = np.zeros_like(grid)
    else:
        raise ValueError(f'未知的初值種類: {kind!r}')
    values[-1] = 0.0
    return RadialProfile(grid=grid, values=values, ball=ball, problem='initial')


def build_nonlinearity(problem: ParabolicProblem) -> Nonlinearity:
    """由 [problem] 表建立反應項。"""
    if problem.nonlinearity == 'heat':
        return Nonlinearity.heat()
    if problem.nonlinearity == 'power_absorption':
        return Nonlinearity.power_absorption(problem.lam, problem.exponent)
    return Nonlinearity.power_source(problem.lam, problem.exponent)


# =============================================================================
# 各問題的流程
# =============================================================================


def _certify_alphas(
    bundle: ReportBundle,
    config: ScenarioConfig,
    profile: RadialProfile,
    alphas: list[float],
    prefix: str,
) -> list[Verdict]:
    settings = config.settings()
    cert = settings.certification
    verdicts: list[Verdict] = []
    for alpha in alphas:
        result = certify(
            profile,
            alpha,
            method=config.certification.method,
            boundary_cut=cert.boundary_cut_fraction * profile.radius,
            epsilon=cert.epsilon,
            n_pairs=cert.n_pairs,
            n_params=cert.n_params,
            seed=cert.seed,
            settings=settings.geometry,
        )
        key = f'{prefix}alpha={alpha:.6g}'
        bundle.certificates[key] = result.with_hash(bundle.scenario_hash)
        verdicts.append(result.verdict)
    return verdicts


def _run_elliptic(
    bundle: ReportBundle, config: ScenarioConfig, ball: Ball, problem: EllipticProblem
) -> None:
    solver = config.solver
    lam, gamma = problem.lam, problem.gamma
    alphas = config.numeric_alphas or [1.0 - gamma]
    bundle.primary_alpha = alphas[0]

    with _stage('conditions'):
        bundle.conditions.append(check_condition(ball, 'C2-necessary'))
        for alpha in alphas:
            bundle.conditions.append(check_condition(ball, 'Eq11', alpha=alpha))
        admissibility = check_nonlinearity(lambda s: lam * s**gamma, 1.0 - gamma)
        bundle.extras['nonlinearity'] = admissibility.to_dict()

    with _stage('solve'):
        profile = solve_power_bvp(ball, lam, gamma, solver.tol, solver.grid_size)
        bundle.profiles['solution'] = profile
        residual = transformed_residual(profile, 1.0 - gamma, lambda s: lam * s**gamma)
        defect = power_concavity_defect(profile, 1.0 - gamma)
        bundle.extras['transformed_residual'] = residual.relative
        bundle.extras['power_concavity_defect'] = defect.max_defect

    with _stage('certify'):
        verdict = combine_verdicts(_certify_alphas(bundle, config, profile, alphas, ''))
    bundle.tags['T1.1'] = verdict if admissibility.holds else 'violated'
    if gamma == 0.0:
        bundle.tags['C1.1'] = verdict


def _run_eigen(bundle: ReportBundle, config: ScenarioConfig, ball: Ball) -> None:
    solver = config.solver
    with _stage('conditions'):
        bundle.conditions.append(check_condition(ball, 'C2-necessary'))
        bundle.conditions.append(check_condition(ball, 'Eq11', alpha=0.0))

    with _stage('solve'):
        solution = first_eigenpair(ball, solver.tol, solver.grid_size)
        bundle.profiles['eigenfunction'] = solution.profile
        bundle.extras['eigen'] = {
            'lambda1': solution.lambda1,
            'rayleigh_gap': solution.rayleigh_gap,
            'sturm_monotone': solution.sturm_monotone,
        }

    with _stage('thresholds'):
        report = alpha_threshold(ball, solution.lambda1)
        try:
            cheng = cheng_check(ball, solver.tol, solver.grid_size, lambda1=solution.lambda1)
            report = report.with_cheng(cheng.holds)
            bundle.extras['cheng'] = cheng.to_dict()
            bundle.tags['PA.2'] = _bool_verdict(cheng.holds)
            estimate = threshold_curvature_estimate(ball, solver.tol, solver.grid_size)
            bundle.extras['threshold_estimate'] = estimate
            bundle.tags['CA.2'] = _bool_verdict(report.A <= estimate * (1.0 + 1e-6))
        except UnsupportedError as exc:
            logger.warning('略過 Cheng 比較', extra={'reason': str(exc)})
        bundle.thresholds.append(report)

    alphas: list[float] = []
    auto = False
    for alpha in config.alphas:
        if alpha == 'auto':
            auto = True
            if report.admissible:
                alphas.append(min(report.A, 1.0))
        else:
            alphas.append(alpha)
    if not alphas:
        alphas = [0.0]
    bundle.primary_alpha = alphas[0]

    with _stage('certify'):
        verdicts = _certify_alphas(bundle, config, solution.profile, alphas, '')
    if 0.0 in alphas:
        bundle.tags['T1.2'] = verdicts[alphas.index(0.0)]
    if auto:
        if report.admissible:
            bundle.tags['CA.1'] = verdicts[alphas.index(min(report.A, 1.0))]
        else:
            bundle.tags['CA.1'] = 'violated'


def _run_parabolic(
    bundle: ReportBundle, config: ScenarioConfig, ball: Ball, problem: ParabolicProblem
) -> None:
    solver = config.solver
    if problem.steady:
        _run_steady(bundle, config, ball, problem)
        return

    nl = build_nonlinearity(problem)
    alphas = config.numeric_alphas or [0.0]
    bundle.primary_alpha = alphas[0]

    with _stage('conditions'):
        bundle.conditions.append(check_condition(ball, 'C2-necessary'))
        bundle.conditions.append(check_condition(ball, 'Eq13'))
        if nl.is_absorption:
            bundle.extras['absorption'] = nl.check_condition().to_dict()

    with _stage('solve'):
        initial = initial_profile(ball, problem.initial, solver.grid_size, solver.tol)
        times = problem.sample_times or geometric_times(problem.t_end)
        states = evolve(ball, nl, initial, problem.t_end, solver.dt, times)
        bundle.evolutions['evolution'] = states

    cut = config.certification.boundary_cut
    with _stage('certify'):
        onsets: dict[str, float | None] = {}
        for alpha in alphas:
            onsets[f'{alpha:.6g}'] = concavity_onset_time(states, alpha, boundary_cut=cut)
            final = certify_radial(states[-1].profile, None, alpha, cut)
            bundle.certificates[f'final:alpha={alpha:.6g}'] = final.with_hash(
                bundle.scenario_hash
            )
        bundle.extras['onset_times'] = onsets

        if problem.initial == 'ring':
            bundle.tags['C4.1'] = _bool_verdict(all(t is not None for t in onsets.values()))
        elif problem.initial in ('bump', 'eigen'):
            preserved: list[Verdict] = []
            for state in states:
                if state.t > 0.0:
                    preserved.append(certify_radial(state.profile, None, 0.0, cut).verdict)
            if problem.nonlinearity == 'heat':
                bundle.tags['T1.3'] = combine_verdicts(preserved)
            elif problem.nonlinearity == 'power_absorption':
                bundle.tags['C1.2'] = combine_verdicts(preserved)


def _run_steady(
    bundle: ReportBundle, config: ScenarioConfig, ball: Ball, problem: ParabolicProblem
) -> None:
    solver = config.solver
    gamma = problem.exponent
    alphas = config.numeric_alphas or [1.0 - gamma]
    bundle.primary_alpha = alphas[0]
    with _stage('conditions'):
        bundle.conditions.append(check_condition(ball, 'C2-necessary'))
    with _stage('solve'):
        profile = steady_state(
            ball, problem.lam, gamma, solver.tol, solver.grid_size, solver.t_max
        )
        bundle.profiles['steady'] = profile
        bundle.extras['steady'] = {
            't': profile.metadata['t'],
            'shooting_gap': profile.metadata['shooting_gap'],
        }
    with _stage('certify'):
        verdict = combine_verdicts(_certify_alphas(bundle, config, profile, alphas, 'steady:'))
    bundle.tags['T3.1'] = verdict


def _run_heat_kernel(
    bundle: ReportBundle, config: ScenarioConfig, ball: Ball, problem: HeatKernelProblem
) -> None:
    factor = config.geometry.factor
    assert isinstance(factor, SpaceFormModel)
    cert = config.certification
    bundle.primary_alpha = 0.0
    with _stage('solve'):
        specs = [KernelSpec(ball.dimension, factor.K, t) for t in problem.times]
        bundle.extras['mass'] = {f'{s.t:.6g}': kernel_mass(s) for s in specs}
        if problem.delta_check:
            errors: dict[str, float] = {}
            for spec in specs:
                approx = delta_approximation(spec)
                bundle.profiles[f'delta:t={spec.t:.6g}'] = approx
                errors[f'{spec.t:.6g}'] = delta_approximation_error(spec, approx)
            bundle.extras['delta_error'] = errors
    with _stage('certify'):
        verdicts: list[Verdict] = []
        for spec in specs:
            result = kernel_log_concavity(
                spec, problem.box_radius, cert.n_pairs, cert.n_params, seed=cert.seed
            )
            bundle.certificates[f'kernel:t={spec.t:.6g}'] = result.with_hash(
                bundle.scenario_hash
            )
            verdicts.append(result.verdict)
    bundle.tags['C1.3'] = combine_verdicts(verdicts)


def run_scenario(config: ScenarioConfig) -> ReportBundle:
    """執行單一情境。

    Raises:
        StageError: 任一階段失敗
    """
    bundle = ReportBundle(name=config.name, scenario_hash=config.scenario_hash())
    with _stage('conditions'):
        ball = config.geometry.to_ball()
    logger.info('開始執行情境', extra={'scenario': config.name, 'hash': bundle.scenario_hash})

    problem = config.problem
    if isinstance(problem, EllipticProblem):
        _run_elliptic(bundle, config, ball, problem)
    elif isinstance(problem, EigenProblem):
        _run_eigen(bundle, config, ball)
    elif isinstance(problem, ParabolicProblem):
        _run_parabolic(bundle, config, ball, problem)
    else:
        _run_heat_kernel(bundle, config, ball, problem)

    logger.info(
        '情境完成',
        extra={'scenario': config.name, 'exit_code': bundle.exit_code, 'tags': bundle.tags},
    )
    return bundle
