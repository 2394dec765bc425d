"""情境設定檔（TOML）。

以 tomllib 讀取並由 pydantic 模型驗證；所有表格都拒絕未知鍵，
config_version 必填。問題表以 kind 區分 elliptic / eigen / parabolic / heat_kernel。

範例::

    config_version = 1
    name = "torsion-r3"
    alphas = [1.0]

    [geometry]
    N = 3
    R = 1.0
    factor = { kind = "space_form", K = 0.0 }

    [problem]
    kind = "elliptic"
    lambda = 1.0
    gamma = 0.0
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import Annotated, Any, Literal

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from warp_concavity.config import (
    DEFAULT_BOUNDARY_CUT_FRACTION,
    DEFAULT_DT,
    DEFAULT_EPSILON,
    DEFAULT_GRID_SIZE,
    DEFAULT_N_PAIRS,
    DEFAULT_N_PARAMS,
    DEFAULT_SEED,
    DEFAULT_T_MAX,
    DEFAULT_TOL,
    CertificationSettings,
    SolverSettings,
    WarpConcavityConfig,
)
from warp_concavity.exceptions import ContractViolationError
from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.factor import (
    CubicPerturbedFactor,
    TabulatedFactor,
    WarpedFactor,
    space_form_factor,
)
from warp_concavity.types import CertificationMethod, ReportFormat

CONFIG_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


# --- 幾何 ---


class SpaceFormModel(_Strict):
    kind: Literal['space_form']
    K: float = 0.0


class CubicModel(_Strict):
    kind: Literal['cubic_perturbed']
    c: float


class TabulatedModel(_Strict):
    kind: Literal['tabulated']
    nodes: list[float]
    values: list[float]


FactorModel = Annotated[
    SpaceFormModel | CubicModel | TabulatedModel, Field(discriminator='kind')
]


class GeometryModel(_Strict):
    """[geometry] 表。"""

    N: int = Field(ge=2)
    R: float = Field(gt=0.0)
    factor: FactorModel = Field(default_factory=lambda: SpaceFormModel(kind='space_form'))

    def to_factor(self) -> WarpedFactor:
        factor = self.factor
        if isinstance(factor, SpaceFormModel):
            return space_form_factor(factor.K)
        if isinstance(factor, CubicModel):
            return CubicPerturbedFactor(factor.c)
        return TabulatedFactor(tuple(factor.nodes), tuple(factor.values))

    def to_ball(self) -> Ball:
        return Ball(self.N, self.R, self.to_factor())


# --- 問題 ---


class EllipticProblem(_Strict):
    """−Δu = λu^γ。"""

    kind: Literal['elliptic']
    lam: float = Field(alias='lambda', gt=0.0)
    gamma: float = Field(ge=0.0, lt=1.0)


class EigenProblem(_Strict):
    """第一 Dirichlet 特徵對。"""

    kind: Literal['eigen']


class ParabolicProblem(_Strict):
    """∂_t u = Δu ± 反應項；steady = true 時改求穩態。"""

    kind: Literal['parabolic']
    nonlinearity: Literal['heat', 'power_absorption', 'power_source'] = 'heat'
    lam: float = Field(default=0.0, alias='lambda', ge=0.0)
    exponent: float = 1.0
    initial: Literal['bump', 'ring', 'zero', 'eigen'] = 'bump'
    t_end: float = Field(default=10.0, gt=0.0)
    sample_times: list[float] | None = None
    steady: bool = False

    @model_validator(mode='after')
    def _check_steady(self) -> ParabolicProblem:
        if self.steady and self.nonlinearity != 'power_source':
            raise ValueError('steady 只適用於 power_source')
        return self


class HeatKernelProblem(_Strict):
    """空間形式熱核；曲率取自 geometry.factor。"""

    kind: Literal['heat_kernel']
    times: list[float] = Field(min_length=1)
    box_radius: float = Field(default=3.0, gt=0.0)
    delta_check: bool = False


ProblemModel = Annotated[
    EllipticProblem | EigenProblem | ParabolicProblem | HeatKernelProblem,
    Field(discriminator='kind'),
]


# --- 求解、認證、輸出 ---


class SolverModel(_Strict):
    grid_size: int = Field(default=DEFAULT_GRID_SIZE, ge=4)
    tol: float = Field(default=DEFAULT_TOL, gt=0.0)
    dt: float = Field(default=DEFAULT_DT, gt=0.0)
    t_max: float = Field(default=DEFAULT_T_MAX, gt=0.0)


class CertificationModel(_Strict):
    method: CertificationMethod = 'both'
    boundary_cut: float | None = None
    epsilon: float = Field(default=DEFAULT_EPSILON, ge=0.0)
    n_pairs: int = Field(default=DEFAULT_N_PAIRS, ge=1)
    n_params: int = Field(default=DEFAULT_N_PARAMS, ge=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0)


class OutputModel(_Strict):
    directory: str | None = None
    formats: list[ReportFormat] = Field(default_factory=lambda: ['csv', 'json'])


class ScenarioConfig(_Strict):
    """完整情境。"""

    config_version: Literal[1]
    name: str = Field(min_length=1)
    geometry: GeometryModel
    problem: ProblemModel
    alphas: list[float | Literal['auto']] = Field(default_factory=lambda: [])
    solver: SolverModel = Field(default_factory=SolverModel)
    certification: CertificationModel = Field(default_factory=CertificationModel)
    outputs: OutputModel = Field(default_factory=OutputModel)

    @model_validator(mode='after')
    def _check_consistency(self) -> ScenarioConfig:
        for alpha in self.alphas:
            if alpha == 'auto':
                if not isinstance(self.problem, EigenProblem):
                    raise ValueError("alpha = 'auto' 只適用於 eigen 問題")
            elif not (0.0 <= alpha <= 1.0):
                raise ValueError(f'α 必須位於 [0, 1]: {alpha}')
        if isinstance(self.problem, HeatKernelProblem):
            factor = self.geometry.factor
            if not isinstance(factor, SpaceFormModel) or factor.K > 0.0:
                raise ValueError('heat_kernel 需要 K ≤ 0 的 space_form 幾何')
        return self

    @property
    def numeric_alphas(self) -> list[float]:
        return [a for a in self.alphas if a != 'auto']

    def canonical(self) -> dict[str, Any]:
        """雜湊與序列化用的正規形式（不含輸出目錄）。"""
        data = self.model_dump(mode='json', by_alias=True)
        data['outputs'].pop('directory', None)
        return data

    def scenario_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()

    def settings(self) -> WarpConcavityConfig:
        """轉成數值核心使用的配置；boundary_cut 換算成相對 R 的比例。"""
        cert = self.certification
        fraction = (
            cert.boundary_cut / self.geometry.R
            if cert.boundary_cut is not None
            else DEFAULT_BOUNDARY_CUT_FRACTION
        )
        return WarpConcavityConfig(
            solver=SolverSettings(**self.solver.model_dump()),
            certification=CertificationSettings(
                boundary_cut_fraction=fraction,
                epsilon=cert.epsilon,
                n_pairs=cert.n_pairs,
                n_params=cert.n_params,
                seed=cert.seed,
            ),
        )


def parse_scenario(data: dict[str, Any]) -> ScenarioConfig:
    """驗證已解析的設定資料。

    Raises:
        ContractViolationError: 設定不合法
    """
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ContractViolationError(f'情境設定不合法: {exc}') from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    """讀取 TOML 情境檔。

    Raises:
        ContractViolationError: TOML 語法錯誤或設定不合法
    """
    try:
        with Path(path).open('rb') as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ContractViolationError(f'無法解析 {path}: {exc}') from exc
    return parse_scenario(data)
