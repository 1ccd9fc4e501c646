"""Natural-unit parameters, the conditioned Gaussian state and energy bookkeeping.

Everything in the package works in units with hbar = m = omega = 1: time in
1/omega, position in sqrt(hbar/(m omega)), momentum in sqrt(hbar m omega) and
energy in hbar omega.  SI quantities only enter through :mod:`calibrate`.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError, EvaluationError

#: Slack allowed on the Heisenberg bound for numerically computed covariances.
HEISENBERG_TOL = 1e-12


def _check_gamma(gamma_tilde: float) -> float:
    gamma_tilde = float(gamma_tilde)
    if not gamma_tilde >= 0.0:
        raise DomainError(f"gamma_tilde must be >= 0, got {gamma_tilde}")
    return gamma_tilde


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    return eta


@dataclass(frozen=True)
class DimensionlessParams:
    """Measurement and control knobs in natural units.

    Parameters
    ----------
    gamma_tilde : float
        Measurement strength hbar*gamma/(m omega^2).
    eta : float
        Detection efficiency in (0, 1].
    s_tilde : float, optional
        Filter cutoff s/omega.
    g_tilde : float, optional
        Feedback gain (band-pass: g/(2 m omega); delayed: force per unit record).
    """

    gamma_tilde: float
    eta: float
    s_tilde: Optional[float] = None
    g_tilde: Optional[float] = None

    def __post_init__(self):
        _check_gamma(self.gamma_tilde)
        _check_eta(self.eta)
        if self.s_tilde is not None and not self.s_tilde >= 0.0:
            raise DomainError(f"s_tilde must be >= 0, got {self.s_tilde}")
        if self.g_tilde is not None and not self.g_tilde >= 0.0:
            raise DomainError(f"g_tilde must be >= 0, got {self.g_tilde}")


@dataclass(frozen=True)
class CovarianceTriple:
    """Position variance, momentum variance and symmetrized covariance."""

    vx: float
    vp: float
    vcov: float

    def __post_init__(self):
        if not (self.vx > 0.0 and self.vp > 0.0):
            raise DomainError(f"variances must be positive, got vx={self.vx}, vp={self.vp}")
        if self.determinant < 0.25 - self.heisenberg_slack:
            raise DomainError(
                f"covariance violates the Heisenberg bound: det={self.determinant!r} < 1/4"
            )

    @property
    def determinant(self) -> float:
        return self.vx * self.vp - self.vcov * self.vcov

    @property
    def heisenberg_slack(self) -> float:
        # the determinant is a difference of two products; its rounding error scales with them
        return HEISENBERG_TOL * max(1.0, self.vx * self.vp)

    def with_spread(self, xx: float, pp: float, xp: float) -> "CovarianceTriple":
        """Add classical ensemble spread of the state's mean values."""
        return CovarianceTriple(self.vx + xx, self.vp + pp, self.vcov + xp)


@dataclass(frozen=True)
class GaussianPureState:
    """Parameters (X, P, R, D) of the conditioned complex Gaussian wavefunction.

    ``R`` and ``D`` are stored dimensionless (hbar R/(m omega), hbar D/(m omega)).
    """

    X: float
    P: float
    R: float
    D: float

    def __post_init__(self):
        if not self.R > 0.0:
            raise DomainError(f"R must be positive, got {self.R}")

    def covariances(self) -> CovarianceTriple:
        return wavefunction_covariances(self)


@dataclass(frozen=True)
class EnergyReport:
    """Mean energy in units of hbar omega.

    ``zero_point`` is the irreducible floor that was added to the fluctuation
    energy of the mean values: the squeezed-vacuum term for LPF and band-pass
    feedback, the conditioned-state floor for LQG and delayed feedback.
    """

    total_energy: float
    occupation: float
    zero_point: float

    @classmethod
    def from_total(cls, total_energy: float, zero_point: float, tol: float = 1e-9) -> "EnergyReport":
        return cls(float(total_energy), occupation_from_energy(total_energy, tol), float(zero_point))


class MethodId(str, enum.Enum):
    """The four feedback protocols compared by the package."""

    LPF = "lpf"
    CD_BANDPASS = "cd-bandpass"
    CD_DELAYED = "cd-delayed"
    LQG = "lqg"

    @classmethod
    def parse(cls, value) -> "MethodId":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.name.lower().replace("_", "-")):
                return member
        raise DomainError(f"unknown method {value!r}; choose from {[m.value for m in cls]}")


@dataclass(frozen=True)
class MethodResult:
    """Outcome of evaluating or optimizing one feedback method.

    ``stderr`` holds Monte Carlo standard errors keyed by quantity name
    (``"occupation"``, ``"purity"``); it is None for closed-form methods.
    """

    method: MethodId
    energy: EnergyReport
    optimal_params: DimensionlessParams
    purity: float
    stderr: Optional[dict] = None

    @property
    def occupation(self) -> float:
        return self.energy.occupation


def stationary_squeeze(gamma_tilde: float) -> tuple[float, float]:
    """Long-time limits (R, D) of the width and chirp parameters."""
    gamma_tilde = _check_gamma(gamma_tilde)
    root = math.hypot(1.0, gamma_tilde)
    r_inf = math.sqrt((root + 1.0) / 2.0)
    # sqrt(root - 1) loses digits for small gamma; use (root - 1) = g^2 / (root + 1)
    d_inf = math.sqrt(gamma_tilde * gamma_tilde / (root + 1.0) / 2.0)
    return r_inf, d_inf


def squeeze_rhs(r: float, d: float, gamma_tilde: float) -> tuple[float, float]:
    """Right-hand sides (dR/dt, dD/dt) of the width/chirp equations."""
    return -2.0 * r * d + gamma_tilde, r * r - d * d - 1.0


def z_fixed_point(gamma_tilde: float) -> complex:
    r_inf, d_inf = stationary_squeeze(gamma_tilde)
    return complex(-r_inf, d_inf)


def z_evolution(z0: complex, gamma_tilde: float, t: float) -> complex:
    """Closed-form solution of dz/dt = i z^2 - gamma - i with z = -R + iD.

    Raises
    ------
    DomainError
        If ``-Re z0 <= 0`` (non-normalizable initial state).
    EvaluationError
        If the Moebius denominator vanishes.
    """
    z0 = complex(z0)
    if not -z0.real > 0.0:
        raise DomainError(f"initial z must have negative real part, got {z0}")
    fixed = z_fixed_point(gamma_tilde)
    denom0 = z0 + fixed
    if denom0 == 0:
        raise EvaluationError("initial value sits on the repelling fixed point")
    c0 = (z0 - fixed) / denom0
    phase = c0 * cmath.exp(2j * fixed * float(t))
    denom = 1.0 - phase
    if abs(denom) < 1e-300:
        raise EvaluationError(f"z(t) has a pole at t={t}")
    return (1.0 + phase) / denom * fixed


def zero_point_energy(gamma_tilde: float) -> float:
    """Energy of the measurement-squeezed vacuum, in hbar omega."""
    gamma_tilde = _check_gamma(gamma_tilde)
    return 0.5 * math.sqrt((math.hypot(1.0, gamma_tilde) + 1.0) / 2.0)


def wavefunction_covariances(state: GaussianPureState) -> CovarianceTriple:
    r, d = state.R, state.D
    if not r > 0.0:
        raise DomainError(f"R must be positive, got {r}")
    return CovarianceTriple(0.5 / r, (r * r + d * d) / (2.0 * r), d / (2.0 * r))


def stationary_wavefunction_covariances(gamma_tilde: float) -> CovarianceTriple:
    r_inf, d_inf = stationary_squeeze(gamma_tilde)
    return wavefunction_covariances(GaussianPureState(0.0, 0.0, r_inf, d_inf))


def occupation_from_energy(e: float, tol: float = 1e-9) -> float:
    """Phonon number n = E/(hbar omega) - 1/2, clamped to zero within ``tol``."""
    e = float(e)
    if e < 0.5 - tol:
        raise DomainError(f"energy {e} lies below the ground-state energy 1/2")
    return max(e - 0.5, 0.0)
