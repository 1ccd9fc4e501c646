"""Feedback cooling of a continuously measured harmonic oscillator.

Closed-form and Monte Carlo occupations and purities for low-pass-filter
feedback, band-pass and delayed cold damping, and LQG control, in natural
units hbar = m = omega = 1.
"""

from .core import (
    CovarianceTriple,
    DimensionlessParams,
    EnergyReport,
    GaussianPureState,
    MethodId,
    MethodResult,
    occupation_from_energy,
    stationary_squeeze,
    wavefunction_covariances,
    z_evolution,
    zero_point_energy,
)
from .errors import (
    DivergenceError,
    DomainError,
    EvaluationError,
    FeedbackCoolingError,
    InputError,
    InstabilityError,
    OptimizationError,
    SingularityError,
)
from .moments import LinearSdeSystem, SecondMomentMatrix, spectral_abscissa, stationary_second_moments

__version__ = "0.1.0"
