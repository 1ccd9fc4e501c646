"""Purity of the ensemble state each method prepares.

The ensemble covariance is the conditioned (or wavefunction) covariance plus
the stationary spread of the mean values.  Neither cold-damping variant
recentres the state using the controller's own estimate.
"""

from __future__ import annotations

import math

from .core import CovarianceTriple, DimensionlessParams, stationary_wavefunction_covariances
from .errors import DomainError
from .systems import bp_physical_moments, lpf_observable_moments, lqg_conditioned_covariances


def purity_from_covariances(c: CovarianceTriple) -> float:
    det = c.determinant
    if det < 0.25 - c.heisenberg_slack:
        raise DomainError(f"covariance determinant {det!r} is below 1/4: not a physical state")
    return 0.5 / math.sqrt(det)


def lqg_purity(gamma_tilde: float, eta: float) -> float:
    return purity_from_covariances(lqg_conditioned_covariances(gamma_tilde, eta))


def lpf_purity(gamma_tilde: float, eta: float, s_tilde: float) -> float:
    """Purity of the state displaced by the filtered estimate X_pre."""
    M = lpf_observable_moments(DimensionlessParams(gamma_tilde, eta, s_tilde=s_tilde))
    base = stationary_wavefunction_covariances(gamma_tilde)
    return purity_from_covariances(base.with_spread(M[0, 0], M[1, 1], M[0, 1]))


def bp_purity(gamma_tilde: float, eta: float, s_tilde: float, g_tilde: float) -> float:
    M = bp_physical_moments(DimensionlessParams(gamma_tilde, eta, s_tilde=s_tilde, g_tilde=g_tilde))
    base = stationary_wavefunction_covariances(gamma_tilde)
    return purity_from_covariances(base.with_spread(M[0, 0], M[1, 1], M[0, 1]))


def delayed_purity(gamma_tilde: float, eta: float, g_tilde: float, cfg):
    """Monte Carlo purity of delayed-record cold damping, as a MomentEstimate."""
    from .sde import delayed_purity_estimate, run_delayed

    moments = run_delayed(gamma_tilde, eta, g_tilde, cfg)
    return delayed_purity_estimate(moments, gamma_tilde, eta)
