"""Linear SDE models of the feedback loops and the conditioned-state floors."""

from __future__ import annotations

import math

import numpy as np

from .core import (
    CovarianceTriple,
    DimensionlessParams,
    _check_eta,
    _check_gamma,
    stationary_squeeze,
    zero_point_energy,
)
from .errors import DomainError
from .moments import LinearSdeSystem, stationary_second_moments

# rows map (X, P, X_pre) to the observables (X - X_pre, P)
LPF_OBSERVABLES = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def _require_positive(name: str, value) -> float:
    if value is None or not value > 0.0:
        raise DomainError(f"{name} must be positive, got {value}")
    return float(value)


def _measurement_noise(gamma_tilde: float, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """(X, P) kicks of the detected and undetected channels at the frozen squeeze."""
    r, d = stationary_squeeze(gamma_tilde)
    x_kick = math.sqrt(gamma_tilde / 2.0) / r
    p_kick = math.sqrt(gamma_tilde / 2.0) * d / r
    detected = math.sqrt(eta) * np.array([x_kick, p_kick])
    lost = math.sqrt(1.0 - eta) * np.array([x_kick, p_kick])
    return detected, lost


def lpf_system(p: DimensionlessParams) -> LinearSdeSystem:
    """Oscillator whose trap centre follows a low-pass-filtered position record.

    Coordinates are (X, P, X_pre).  The translation mode (1, 0, 1) has
    eigenvalue 0 and is masked by default.
    """
    g = _require_positive("gamma_tilde", p.gamma_tilde)
    s = _require_positive("s_tilde", p.s_tilde)
    eta = p.eta
    drift = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [s, 0.0, -s]])
    detected, lost = _measurement_noise(g, eta)
    b1 = np.array([detected[0], detected[1], s / math.sqrt(2.0 * g * eta)])
    b2 = np.array([lost[0], lost[1], 0.0])
    return LinearSdeSystem(drift, (b1, b2), labels=("X", "P", "X_pre"), masked_eigenvalues=(0.0,))


def lpf_observable_moments(p: DimensionlessParams, method: str = "direct") -> np.ndarray:
    """Stationary second moments of (X - X_pre, P) as a 2x2 matrix."""
    S = stationary_second_moments(lpf_system(p), method=method).values
    return LPF_OBSERVABLES @ S @ LPF_OBSERVABLES.T


def lpf_energy_from_moments(p: DimensionlessParams, method: str = "direct") -> float:
    M = lpf_observable_moments(p, method)
    return 0.5 * (M[0, 0] + M[1, 1]) + zero_point_energy(p.gamma_tilde)


def bp_system(p: DimensionlessParams) -> LinearSdeSystem:
    """Cold damping through a complex band-pass filter.

    Coordinates are (X, P, Y, Y*) with Y the filter output and Y* its
    conjugate, kept as an independent coordinate.
    """
    g = _require_positive("gamma_tilde", p.gamma_tilde)
    s = _require_positive("s_tilde", p.s_tilde)
    if p.g_tilde is None:
        raise DomainError("g_tilde is required for the band-pass system")
    k = float(p.g_tilde)
    eta = p.eta
    drift = np.array(
        [
            [0, 1, 0, 0],
            [-1, 0, -1j * k, 1j * k],
            [2 * s, 0, 1j - s, 0],
            [2 * s, 0, 0, -1j - s],
        ],
        dtype=complex,
    )
    detected, lost = _measurement_noise(g, eta)
    filt = math.sqrt(2.0 * s * s / (eta * g))
    c1 = np.array([detected[0], detected[1], filt, filt], dtype=complex)
    c2 = np.array([lost[0], lost[1], 0.0, 0.0], dtype=complex)
    return LinearSdeSystem(drift, (c1, c2), labels=("X", "P", "Y", "Y*"))


def bp_real_system(p: DimensionlessParams) -> LinearSdeSystem:
    """The band-pass loop in real coordinates (X, P, Re Y, Im Y), for simulation."""
    cplx = bp_system(p)
    # (X, P, Y, Y*) = T (X, P, u, v)
    T = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1j], [0, 0, 1, -1j]])
    Tinv = np.linalg.inv(T)
    drift = (Tinv @ cplx.drift @ T).real
    noise = tuple((Tinv @ v).real for v in cplx.noise_vectors)
    return LinearSdeSystem(drift, noise, labels=("X", "P", "Y_re", "Y_im"))


def bp_physical_moments(p: DimensionlessParams, method: str = "direct") -> np.ndarray:
    """Real 2x2 stationary moments of (X, P) under band-pass cold damping."""
    S = stationary_second_moments(bp_system(p), method=method).values
    return S[:2, :2].real


def bp_energy_from_moments(p: DimensionlessParams, method: str = "direct") -> float:
    M = bp_physical_moments(p, method)
    return 0.5 * (M[0, 0] + M[1, 1]) + zero_point_energy(p.gamma_tilde)


def free_system(gamma_tilde: float, eta: float = 1.0) -> LinearSdeSystem:
    """Measured oscillator with no feedback: mean values only heat."""
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    detected, lost = _measurement_noise(g, eta)
    drift = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return LinearSdeSystem(drift, (detected, lost), labels=("X", "P"))


def lqg_conditioned_covariances(gamma_tilde: float, eta: float) -> CovarianceTriple:
    """Stationary covariances of the observer's conditioned state at efficiency eta."""
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    xi = math.sqrt(1.0 + eta * g * g)
    scale = 1.0 / math.sqrt(2.0 * eta)
    root = math.sqrt(xi + 1.0)
    # (xi - 1) = eta g^2 / (xi + 1) avoids cancellation at small g
    vcov = 0.5 / math.sqrt(eta) * math.sqrt(eta * g * g) / (xi + 1.0)
    return CovarianceTriple(scale / root, scale * xi / root, vcov)
