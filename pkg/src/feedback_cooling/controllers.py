"""Closed-form energies, stability conditions and optimal settings of the four methods."""

from __future__ import annotations

import cmath
import math
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import purity as _purity
from .core import (
    DimensionlessParams,
    EnergyReport,
    MethodId,
    MethodResult,
    _check_eta,
    _check_gamma,
    stationary_squeeze,
    zero_point_energy,
)
from .errors import DomainError, InstabilityError, OptimizationError, SingularityError
from .systems import (
    bp_energy_from_moments,
    bp_system,
    lpf_energy_from_moments,
    lpf_system,
    lqg_conditioned_covariances,
)

__all__ = [
    "MethodId",
    "MethodResult",
    "lpf_system",
    "lpf_energy",
    "lpf_optimal_s",
    "lpf_min_occupation",
    "lpf_result",
    "bp_system",
    "bp_eigenvalues",
    "bp_is_stable",
    "bp_energy_closed_form",
    "bp_energy",
    "bp_energy_expansion",
    "bp_minimize",
    "lqg_energy",
    "lqg_conditioned_covariances",
    "lqg_result",
    "delayed_result",
    "fundamental_bound",
    "method_result",
]


def fundamental_bound(eta: float) -> float:
    """Lowest occupation reachable at detection efficiency ``eta``."""
    eta = _check_eta(eta)
    return 0.5 * (1.0 / math.sqrt(eta) - 1.0)


# ---------------------------------------------------------------- LPF


def lpf_energy(p: DimensionlessParams) -> float:
    g, eta, s = p.gamma_tilde, p.eta, p.s_tilde
    if not g > 0.0:
        raise DomainError(f"gamma_tilde must be positive, got {g}")
    if s is None or not s > 0.0:
        raise DomainError(f"s_tilde must be positive, got {s}")
    return (s * (2.0 / (g * eta) + g) + 2.0 * g / s) / 8.0


def lpf_optimal_s(gamma_tilde: float, eta: float) -> float:
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    return g / math.sqrt(1.0 / eta + g * g / 2.0)


def lpf_min_occupation(gamma_tilde: float, eta: float) -> float:
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    return 0.5 * (math.sqrt(1.0 / eta + g * g / 2.0) - 1.0)


def lpf_result(gamma_tilde: float, eta: float) -> MethodResult:
    s = lpf_optimal_s(gamma_tilde, eta)
    p = DimensionlessParams(gamma_tilde, eta, s_tilde=s)
    report = EnergyReport.from_total(lpf_energy(p), zero_point_energy(gamma_tilde))
    return MethodResult(MethodId.LPF, report, p, _purity.lpf_purity(gamma_tilde, eta, s))


# ---------------------------------------------------------- band-pass


def bp_eigenvalues(s_tilde: float, g_tilde: float) -> np.ndarray:
    """The four drift eigenvalues of the band-pass loop in closed form."""
    s, k = float(s_tilde), float(g_tilde)
    r = cmath.sqrt(4.0 * k * s - s * s)
    out = []
    for sign in (1.0, -1.0):
        root = cmath.sqrt(s * s - 4.0 - 4.0 * sign * r)
        out.extend([(-s + root) / 2.0, (-s - root) / 2.0])
    return np.array(out)


def bp_is_stable(s_tilde: float, g_tilde: float) -> bool:
    """True when band-pass cold damping has a stationary state.

    A strictly positive gain is required: at zero gain the oscillator is
    undamped and its eigenvalues sit on the imaginary axis.
    """
    if not s_tilde > 0.0:
        raise DomainError(f"s_tilde must be positive, got {s_tilde}")
    return 0.0 < g_tilde < 0.25 * (s_tilde + 1.0 / s_tilde)


def _require_bp_stable(p: DimensionlessParams):
    if p.s_tilde is None or p.g_tilde is None:
        raise DomainError("band-pass energy needs both s_tilde and g_tilde")
    if not bp_is_stable(p.s_tilde, p.g_tilde):
        nu = bp_eigenvalues(p.s_tilde, p.g_tilde)
        worst = nu[np.argmax(nu.real)]
        raise InstabilityError(
            f"band-pass loop unstable at s={p.s_tilde}, g={p.g_tilde}: "
            f"need 0 < g < (s + 1/s)/4 = {0.25 * (p.s_tilde + 1.0 / p.s_tilde)}",
            eigenvalue=complex(worst),
        )


def bp_energy_closed_form(p: DimensionlessParams) -> float:
    """Stationary band-pass energy from the explicit rational expression.

    Raises SingularityError on the removable pole 4 g s - s^2 - 1 = 0;
    :func:`bp_energy` falls back to the Lyapunov solve there.
    """
    _require_bp_stable(p)
    g = p.gamma_tilde
    if not g > 0.0:
        raise DomainError(f"gamma_tilde must be positive, got {g}")
    eta, s, k = p.eta, p.s_tilde, p.g_tilde
    pole = 4.0 * k * s - s * s - 1.0
    if pole == 0.0:
        raise SingularityError(f"closed form has a removable pole at s={s}, g={k}")
    R, D = stationary_squeeze(g)
    s2 = s * s
    inner = (
        -8.0 * k * k * s * (g * (D * D - 4.0 * D * s - s2 + 2.0) + 2.0 * D * R * (s2 - 1.0) - 8.0 * R * s)
        - 2.0 * g * k * (D * D * (s2 * s2 + 5.0 * s2 - 2.0) + 4.0 * D * (s2 * s + s) + 3.0 * s2 * s2 + 7.0 * s2 - 2.0)
        + g * (D * D + 1.0) * s * (s2 + 1.0) * (s2 + 4.0)
        + 8.0 * k * R * s * (s2 + 1.0) * (D * s - 2.0)
    )
    lead = 16.0 * k * k * R * R * s * (2.0 * k * s - s2 - 1.0)
    pre = 1.0 / (32.0 * g * k * eta * R * R * s * pole)
    return pre * (lead - g * eta * inner) + zero_point_energy(g)


def bp_energy(p: DimensionlessParams) -> float:
    """Band-pass energy, closed form when possible, Lyapunov solve at the pole."""
    try:
        return bp_energy_closed_form(p)
    except SingularityError:
        return bp_energy_from_moments(p)


def bp_energy_expansion(gamma_tilde: float, eta: float) -> float:
    """Small-measurement expansion of the minimal band-pass energy."""
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    e6 = eta ** (1.0 / 6.0)
    return 0.5 / math.sqrt(eta) + 3.0 / (16.0 * e6) * g ** (2.0 / 3.0) + 5.0 * e6 / 16.0 * g ** (4.0 / 3.0)


def bp_expansion_optimum(gamma_tilde: float, eta: float) -> tuple[float, float]:
    """Leading-order optimal (s, g) for small measurement strength."""
    return eta ** (1.0 / 6.0) * gamma_tilde ** (1.0 / 3.0), 0.5 * math.sqrt(eta) * gamma_tilde


def bp_minimize(gamma_tilde: float, eta: float, grid: int = 9, span: float = 1.0) -> MethodResult:
    """Minimize the band-pass energy over (s, g) inside the stable region.

    A log-spaced grid of ``grid`` x ``grid`` points spanning a factor
    ``e**span`` either way around the expansion optimum seeds a Nelder-Mead
    search in log coordinates.
    """
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    if not g > 0.0:
        raise DomainError("gamma_tilde must be positive for band-pass minimization")

    def objective(x):
        s, k = np.exp(x)
        if not bp_is_stable(s, k):
            return math.inf
        try:
            return bp_energy(DimensionlessParams(g, eta, s_tilde=s, g_tilde=k))
        except InstabilityError:
            return math.inf

    centre = np.log(bp_expansion_optimum(g, eta))
    offsets = np.linspace(-span, span, grid)
    best_val, best_x = math.inf, None
    for ds in offsets:
        for dk in offsets:
            x = centre + (ds, dk)
            val = objective(x)
            if val < best_val:
                best_val, best_x = val, x
    if best_x is None:
        raise OptimizationError(f"no stable band-pass setting found near gamma={g}, eta={eta}")

    res = minimize(objective, best_x, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 5000})
    x = res.x if res.fun <= best_val else best_x
    s, k = (float(v) for v in np.exp(x))
    p = DimensionlessParams(g, eta, s_tilde=s, g_tilde=k)
    report = EnergyReport.from_total(bp_energy(p), zero_point_energy(g))
    return MethodResult(MethodId.CD_BANDPASS, report, p, _purity.bp_purity(g, eta, s, k))


# ---------------------------------------------------------------- LQG


def lqg_energy(gamma_tilde: float, eta: float) -> float:
    """Energy under optimal control in the infinite-gain limit."""
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    xi = math.sqrt(1.0 + eta * g * g)
    return 0.5 / math.sqrt(eta) * math.sqrt((xi + 1.0) / 2.0) + g / (2.0 * (xi + 1.0))


def lqg_result(gamma_tilde: float, eta: float) -> MethodResult:
    cov = lqg_conditioned_covariances(gamma_tilde, eta)
    report = EnergyReport.from_total(lqg_energy(gamma_tilde, eta), 0.5 * (cov.vx + cov.vp))
    return MethodResult(MethodId.LQG, report, DimensionlessParams(gamma_tilde, eta),
                        _purity.purity_from_covariances(cov))


# ------------------------------------------------------------ delayed


def delayed_result(gamma_tilde: float, eta: float, cfg=None, g_tilde: Optional[float] = None,
                   floor: str = "conditioned") -> MethodResult:
    """Monte Carlo result for delayed-record cold damping.

    The gain is optimized with :func:`sde.optimize_delayed_gain` unless given.
    """
    from . import sde

    cfg = cfg if cfg is not None else sde.SimConfig()
    if g_tilde is None:
        g_tilde = sde.optimize_delayed_gain(gamma_tilde, eta, cfg, floor=floor)
    return sde.simulate_delayed_cd(gamma_tilde, eta, g_tilde, cfg, floor=floor)


def method_result(method, gamma_tilde: float, eta: float, cfg=None, **kwargs) -> MethodResult:
    """Optimal-setting result for any of the four methods."""
    method = MethodId.parse(method)
    if method is MethodId.LPF:
        return lpf_result(gamma_tilde, eta)
    if method is MethodId.LQG:
        return lqg_result(gamma_tilde, eta)
    if method is MethodId.CD_BANDPASS:
        return bp_minimize(gamma_tilde, eta)
    return delayed_result(gamma_tilde, eta, cfg, **kwargs)
