"""幾何模組。

旋轉對稱球的彎曲因子、條件檢查與截面測地線。
"""

from warp_concavity.geometry.ball import Ball
from warp_concavity.geometry.conditions import ConditionReport, check_condition, require_convex
from warp_concavity.geometry.factor import (
    CubicPerturbedFactor,
    FactorDerivatives,
    LogDerivatives,
    SpaceFormFactor,
    TabulatedFactor,
    WarpedFactor,
    convexity_radius_space_form,
    factor_from_dict,
    log_sigma_derivs,
    radial_sectional_curvature,
    space_form_factor,
)
from warp_concavity.geometry.geodesic import (
    Geodesic,
    connect_geodesic,
    connect_geodesics,
    integrate_geodesic,
)

__all__ = [
    'Ball',
    'ConditionReport',
    'CubicPerturbedFactor',
    'FactorDerivatives',
    'Geodesic',
    'LogDerivatives',
    'SpaceFormFactor',
    'TabulatedFactor',
    'WarpedFactor',
    'check_condition',
    'connect_geodesic',
    'connect_geodesics',
    'convexity_radius_space_form',
    'factor_from_dict',
    'integrate_geodesic',
    'log_sigma_derivs',
    'radial_sectional_curvature',
    'require_convex',
    'space_form_factor',
]
