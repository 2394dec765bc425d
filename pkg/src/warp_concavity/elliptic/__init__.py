"""橢圓型徑向問題：射擊法、第一特徵對與 Bessel 零點。"""

from warp_concavity.elliptic.bessel import bessel_first_zero
from warp_concavity.elliptic.eigen import EigenSolution, eigenvalue_space_form, first_eigenpair
from warp_concavity.elliptic.profile import RadialProfile
from warp_concavity.elliptic.shooting import (
    NonlinearityReport,
    RadialIntegrator,
    check_nonlinearity,
    solve_dirichlet_bvp,
    solve_power_bvp,
)

__all__ = [
    'EigenSolution',
    'NonlinearityReport',
    'RadialIntegrator',
    'RadialProfile',
    'bessel_first_zero',
    'check_nonlinearity',
    'eigenvalue_space_form',
    'first_eigenpair',
    'solve_dirichlet_bvp',
    'solve_power_bvp',
]
