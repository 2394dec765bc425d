"""Warp Concavity - 旋轉對稱球上 α-凹性的數值驗證。"""

__version__ = '0.1.0'

from warp_concavity.concavity import (
    ConcavityCertificate,
    certify,
    certify_geodesic_samples,
    certify_radial,
    w_transform,
)
from warp_concavity.config import WarpConcavityConfig
from warp_concavity.elliptic import (
    EigenSolution,
    RadialProfile,
    first_eigenpair,
    solve_dirichlet_bvp,
    solve_power_bvp,
)
from warp_concavity.exceptions import WarpConcavityError
from warp_concavity.geometry import Ball, check_condition, connect_geodesic, space_form_factor
from warp_concavity.heat_kernel import KernelSpec, kernel_log_concavity, kernel_value
from warp_concavity.parabolic import Nonlinearity, concavity_onset_time, evolve, steady_state
from warp_concavity.power_means import alpha_mean, q_exp, q_log
from warp_concavity.thresholds import ThresholdReport, alpha_threshold

__all__ = [
    'Ball',
    'ConcavityCertificate',
    'EigenSolution',
    'KernelSpec',
    'Nonlinearity',
    'RadialProfile',
    'ThresholdReport',
    'WarpConcavityConfig',
    'WarpConcavityError',
    'alpha_mean',
    'alpha_threshold',
    'certify',
    'certify_geodesic_samples',
    'certify_radial',
    'check_condition',
    'concavity_onset_time',
    'connect_geodesic',
    'evolve',
    'first_eigenpair',
    'kernel_log_concavity',
    'kernel_value',
    'q_exp',
    'q_log',
    'solve_dirichlet_bvp',
    'solve_power_bvp',
    'space_form_factor',
    'steady_state',
    'w_transform',
]
