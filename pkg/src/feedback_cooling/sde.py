"""Seeded Monte Carlo integration of the feedback loops.

Every trajectory draws its Gaussian increments from its own generator,
spawned deterministically from ``SimConfig.seed``, so a configuration always
reproduces the same estimates.  Stationary moments are time averages over
``[burn_in, t_total]``; standard errors come from batch means (at least 16
batches in total, several per trajectory when trajectories are few).
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .core import (
    DimensionlessParams,
    EnergyReport,
    MethodId,
    MethodResult,
    _check_eta,
    _check_gamma,
    zero_point_energy,
)
from .errors import DivergenceError, DomainError, InstabilityError, OptimizationError
from .moments import LinearSdeSystem
from .purity import purity_from_covariances
from .systems import free_system, lqg_conditioned_covariances

DIVERGENCE_LIMIT = 1e6
MIN_BATCHES = 16
_BLOCK = 1 << 16
QUARTER_PERIOD = math.pi / 2.0


class Scheme(str, enum.Enum):
    EULER_MARUYAMA = "euler-maruyama"
    WEAK_ORDER_2 = "weak-order-2"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"em": cls.EULER_MARUYAMA, "euler": cls.EULER_MARUYAMA,
                   "weak2": cls.WEAK_ORDER_2, "heun": cls.WEAK_ORDER_2}
        for member in cls:
            if key == member.value:
                return member
        if key in aliases:
            return aliases[key]
        raise DomainError(f"unknown scheme {value!r}")


@dataclass(frozen=True)
class SimConfig:
    """Time grid, ensemble size and seed of a Monte Carlo run (dimensionless time)."""

    dt: float = math.pi / 2000.0
    t_total: float = 4000.0 * math.pi
    burn_in: float = 400.0 * math.pi
    n_traj: int = 64
    seed: int = 12345
    scheme: Scheme = Scheme.WEAK_ORDER_2

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not self.dt > 0.0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not self.t_total > 0.0:
            raise DomainError(f"t_total must be positive, got {self.t_total}")
        if not 0.0 <= self.burn_in < self.t_total:
            raise DomainError(f"burn_in must lie in [0, t_total), got {self.burn_in}")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise DomainError(f"n_traj must be a positive integer, got {self.n_traj}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise DomainError(f"seed must be a non-negative integer, got {self.seed}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_total / self.dt))

    @property
    def burn_steps(self) -> int:
        return int(round(self.burn_in / self.dt))

    @property
    def batches_per_traj(self) -> int:
        return max(1, math.ceil(MIN_BATCHES / self.n_traj))

    @property
    def delay_steps(self) -> int:
        """Steps in a quarter period; raises unless dt divides it exactly."""
        k = int(round(QUARTER_PERIOD / self.dt))
        if k < 1 or abs(k * self.dt - QUARTER_PERIOD) > 1e-12:
            raise DomainError(f"dt={self.dt!r} does not divide the quarter period pi/2")
        return k


@dataclass
class DelayBuffer:
    """Ring of the last ``length`` record samples (position and noise increment)."""

    length: int
    x: np.ndarray = field(init=False)
    w: np.ndarray = field(init=False)
    cursor: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise DomainError("delay buffer needs at least one slot")
        self.x = np.zeros(self.length)
        self.w = np.zeros(self.length)

    @classmethod
    def for_config(cls, cfg: SimConfig) -> "DelayBuffer":
        return cls(cfg.delay_steps)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    n_effective: int

    def __post_init__(self):
        if not self.stderr >= 0.0:
            raise DomainError(f"stderr must be >= 0, got {self.stderr}")
        if self.n_effective < 1:
            raise DomainError("n_effective must be >= 1")

    def within(self, target: float, n_sigma: float) -> bool:
        return abs(self.mean - target) <= n_sigma * self.stderr


@dataclass(frozen=True)
class MonteCarloMoments:
    """Batch means of the observable products y y^T, shape (n_batches, k, k)."""

    labels: tuple
    batch_means: np.ndarray

    @property
    def n_batches(self) -> int:
        return self.batch_means.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.batch_means.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        return self.batch_means.std(axis=0, ddof=1) / math.sqrt(self.n_batches)

    def estimate(self, i: int, j: int) -> MomentEstimate:
        vals = self.batch_means[:, i, j]
        return self._summarize(vals)

    def linear(self, weights) -> MomentEstimate:
        """Estimate of sum_ij w_ij E[y_i y_j]."""
        w = np.asarray(weights, dtype=float)
        return self._summarize(np.einsum("bij,ij->b", self.batch_means, w))

    def delta(self, fn: Callable[[np.ndarray], float]) -> MomentEstimate:
        """Estimate of fn(E[y y^T]) with the delta-method standard error."""
        centre = self.mean
        value = float(fn(centre))
        eps = 1e-6
        devs = self.batch_means - centre
        lin = np.array([(fn(centre + eps * d) - fn(centre - eps * d)) / (2 * eps) for d in devs])
        err = lin.std(ddof=1) / math.sqrt(self.n_batches) if self.n_batches > 1 else 0.0
        return MomentEstimate(value, float(err), self.n_batches)

    def _summarize(self, vals: np.ndarray) -> MomentEstimate:
        err = vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0
        return MomentEstimate(float(vals.mean()), float(err), int(vals.size))


# ------------------------------------------------------------------ driver


class _LinearStepper:
    def __init__(self, system: LinearSdeSystem, observables: np.ndarray, heun: bool):
        self.A = np.ascontiguousarray(system.drift, dtype=float)
        self.B = np.ascontiguousarray(system.noise_matrix, dtype=float)
        self.T = np.ascontiguousarray(observables, dtype=float)
        self.heun = heun
        self.n_state = system.dim
        self.x = np.zeros(self.n_state)

    def reset(self):
        self.x = np.zeros(self.n_state)

    def draw(self, rng, steps):
        return rng.standard_normal((steps, self.B.shape[1]))

    def advance(self, z, dt, acc, accumulate, rec, stride, step0):
        return _kernels.linear_block(self.x, self.A, self.B, z, dt, self.heun, self.T, acc,
                                     accumulate, rec, stride, step0, DIVERGENCE_LIMIT)


class _DelayedStepper:
    n_state = 2

    def __init__(self, delay: int, gain: float, a: float, cp: float, c: float, heun: bool):
        self.delay, self.gain, self.a, self.cp, self.c = delay, gain, a, cp, c
        self.heun = heun
        self.reset()

    def reset(self):
        self.x = np.zeros(2)
        self.buffer = DelayBuffer(self.delay)

    def draw(self, rng, steps):
        return rng.standard_normal(steps)

    def advance(self, z, dt, acc, accumulate, rec, stride, step0):
        buf = self.buffer
        status, buf.cursor = _kernels.delayed_block(
            self.x, buf.x, buf.w, buf.cursor, z, dt, self.heun, self.gain, self.a, self.cp,
            self.c, acc, accumulate, rec, stride, step0, DIVERGENCE_LIMIT)
        return status


def _segments(cfg: SimConfig):
    n, burn, nb = cfg.n_steps, cfg.burn_steps, cfg.batches_per_traj
    if n - burn < nb:
        raise DomainError("measurement window is shorter than the number of batches")
    edges = np.linspace(burn, n, nb + 1).round().astype(int)
    segs = [(0, burn, None)] if burn > 0 else []
    segs += [(int(edges[b]), int(edges[b + 1]), b) for b in range(nb)]
    return segs


def _drive(stepper, cfg: SimConfig, k: int, record_stride: int = 0):
    """Run every trajectory; return batch means and optional state records."""
    nb = cfg.batches_per_traj
    means = np.zeros((cfg.n_traj * nb, k, k))
    n_rec = cfg.n_steps // record_stride + 1 if record_stride > 0 else 1
    records = []
    children = np.random.SeedSequence(int(cfg.seed)).spawn(cfg.n_traj)
    for traj, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        stepper.reset()
        rec = np.zeros((n_rec, stepper.n_state))
        for start, end, batch in _segments(cfg):
            acc = np.zeros((k, k))
            step = start
            while step < end:
                size = min(_BLOCK, end - step)
                z = stepper.draw(rng, size)
                status = stepper.advance(z, cfg.dt, acc, batch is not None, rec, record_stride, step)
                if status >= 0:
                    t_fail = (step + status + 1) * cfg.dt
                    raise DivergenceError(
                        f"trajectory {traj} left |x| <= {DIVERGENCE_LIMIT:g} at t={t_fail:.6g}",
                        time=t_fail, trajectory=traj)
                step += size
            if batch is not None:
                means[traj * nb + batch] = acc / (end - start)
        if record_stride > 0:
            records.append(rec)
    return means, records


def _write_dumps(dump_dir, records, labels, dt, stride):
    os.makedirs(dump_dir, exist_ok=True)
    header = ",".join(("t",) + tuple(labels))
    for i, rec in enumerate(records):
        t = np.arange(rec.shape[0]) * stride * dt
        path = os.path.join(dump_dir, f"traj_{i:04d}.csv")
        np.savetxt(path, np.column_stack([t, rec]), delimiter=",", header=header,
                   comments="", fmt="%.17g")


def _default_stride(cfg: SimConfig) -> int:
    return max(1, cfg.n_steps // 10000)


def integrate_linear(system: LinearSdeSystem, cfg: SimConfig, observables=None,
                     dump_dir: Optional[str] = None, dump_stride: Optional[int] = None) -> MonteCarloMoments:
    """Time-and-ensemble averaged second moments of ``observables @ x``.

    Parameters
    ----------
    system : LinearSdeSystem
        Must be real; complex-coordinate models need their real form first.
    observables : array (k, n), optional
        Linear read-outs; defaults to the identity (all coordinates).
    dump_dir : str, optional
        Write one ``t,<labels>`` CSV per trajectory, sampled every ``dump_stride`` steps.

    Raises
    ------
    DivergenceError
        When any coordinate exceeds the divergence limit.
    """
    if system.is_complex:
        raise DomainError("integrate_linear needs a real system; use its real-coordinate form")
    T = np.eye(system.dim) if observables is None else np.atleast_2d(np.asarray(observables, float))
    if T.shape[1] != system.dim:
        raise DomainError(f"observables must have {system.dim} columns")
    stepper = _LinearStepper(system, T, cfg.scheme is Scheme.WEAK_ORDER_2)
    stride = (dump_stride or _default_stride(cfg)) if dump_dir else 0
    means, records = _drive(stepper, cfg, T.shape[0], stride)
    if dump_dir:
        _write_dumps(dump_dir, records, system.labels, cfg.dt, stride)
    if observables is None:
        labels = system.labels
    else:
        labels = tuple(f"y{i}" for i in range(T.shape[0]))
    return MonteCarloMoments(labels, means)


def simulate_photocurrent(x, dw1, dt: float, gamma_tilde: float, eta: float) -> np.ndarray:
    """Sampled record I_k = X_k + dW_k / (sqrt(2 gamma eta) dt), reusing the state's increments."""
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    if not g > 0.0:
        raise DomainError("the record is undefined without measurement (gamma_tilde = 0)")
    x = np.asarray(x, dtype=float)
    dw1 = np.asarray(dw1, dtype=float)
    if x.shape != dw1.shape:
        raise DomainError("x and dw1 must have the same shape")
    return x + dw1 / (math.sqrt(2.0 * g * eta) * dt)


# ----------------------------------------------------------- delayed loop


def _delayed_coefficients(gamma_tilde: float, eta: float):
    cov = lqg_conditioned_covariances(gamma_tilde, eta)
    k = math.sqrt(2.0 * eta * gamma_tilde)
    return cov, k * cov.vx, k * cov.vcov, 1.0 / k


def run_delayed(gamma_tilde: float, eta: float, g_tilde: float, cfg: SimConfig,
                dump_dir: Optional[str] = None, dump_stride: Optional[int] = None) -> MonteCarloMoments:
    """Stationary moments of the conditioned means (X, P) under delayed-record feedback."""
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    if not g > 0.0:
        raise DomainError("delayed feedback needs a measurement record (gamma_tilde > 0)")
    if not g_tilde >= 0.0:
        raise DomainError(f"g_tilde must be >= 0, got {g_tilde}")
    _, a, cp, c = _delayed_coefficients(g, eta)
    stepper = _DelayedStepper(cfg.delay_steps, float(g_tilde), a, cp, c,
                              cfg.scheme is Scheme.WEAK_ORDER_2)
    stride = (dump_stride or _default_stride(cfg)) if dump_dir else 0
    means, records = _drive(stepper, cfg, 2, stride)
    if dump_dir:
        _write_dumps(dump_dir, records, ("X", "P"), cfg.dt, stride)
    return MonteCarloMoments(("X", "P"), means)


def delayed_floor(gamma_tilde: float, eta: float, floor: str = "conditioned") -> float:
    """Energy added to the mean-value fluctuations of the delayed loop."""
    if floor == "conditioned":
        cov = lqg_conditioned_covariances(gamma_tilde, eta)
        return 0.5 * (cov.vx + cov.vp)
    if floor == "zero-point":
        return zero_point_energy(gamma_tilde)
    raise DomainError(f"floor must be 'conditioned' or 'zero-point', got {floor!r}")


def delayed_energy(moments: MonteCarloMoments, gamma_tilde: float, eta: float,
                   floor: str = "conditioned") -> MomentEstimate:
    fluct = moments.linear(0.5 * np.eye(2))
    return MomentEstimate(fluct.mean + delayed_floor(gamma_tilde, eta, floor), fluct.stderr,
                          fluct.n_effective)


def delayed_purity_estimate(moments: MonteCarloMoments, gamma_tilde: float, eta: float) -> MomentEstimate:
    cov = lqg_conditioned_covariances(gamma_tilde, eta)

    def purity(m):
        det = (cov.vx + m[0, 0]) * (cov.vp + m[1, 1]) - (cov.vcov + 0.5 * (m[0, 1] + m[1, 0])) ** 2
        return 0.5 / math.sqrt(det)

    est = moments.delta(purity)
    # validate the point estimate against the Heisenberg bound
    m = moments.mean
    purity_from_covariances(cov.with_spread(m[0, 0], m[1, 1], 0.5 * (m[0, 1] + m[1, 0])))
    return est


def simulate_delayed_cd(gamma_tilde: float, eta: float, g_tilde: float, cfg: SimConfig,
                        floor: str = "conditioned") -> MethodResult:
    """Monte Carlo energy and purity of cold damping by a quarter-period-delayed record."""
    moments = run_delayed(gamma_tilde, eta, g_tilde, cfg)
    energy = delayed_energy(moments, gamma_tilde, eta, floor)
    purity = delayed_purity_estimate(moments, gamma_tilde, eta)
    report = EnergyReport.from_total(energy.mean, delayed_floor(gamma_tilde, eta, floor))
    params = DimensionlessParams(gamma_tilde, eta, g_tilde=float(g_tilde))
    return MethodResult(MethodId.CD_DELAYED, report, params, purity.mean,
                        stderr={"occupation": energy.stderr, "purity": purity.stderr})


def _round_sig(x: float, digits: int = 2) -> float:
    if x == 0.0:
        return 0.0
    return float(f"{x:.{digits - 1}e}")


def optimize_delayed_gain(gamma_tilde: float, eta: float, cfg: SimConfig,
                          bracket: tuple = (0.3, 3.0), floor: str = "conditioned",
                          digits: int = 2) -> float:
    """Energy-minimizing delayed-feedback gain, to ``digits`` significant digits.

    Golden-section search in log(gain) over ``bracket`` times sqrt(eta)*gamma.
    Every candidate reuses the same seed so that comparisons see common noise.
    """
    g = _check_gamma(gamma_tilde)
    eta = _check_eta(eta)
    if not g > 0.0:
        raise DomainError("gain optimization needs gamma_tilde > 0")
    scale = math.sqrt(eta) * g
    lo, hi = math.log(bracket[0] * scale), math.log(bracket[1] * scale)
    cache = {}

    def energy(logk):
        if logk not in cache:
            try:
                cache[logk] = delayed_energy(run_delayed(g, eta, math.exp(logk), cfg), g, eta, floor).mean
            except InstabilityError:
                cache[logk] = math.inf
        return cache[logk]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    while True:
        if _round_sig(math.exp(lo), digits) == _round_sig(math.exp(hi), digits) or hi - lo < 1e-4:
            break
        if energy(c) <= energy(d):
            hi, d = d, c
            c = hi - inv_phi * (hi - lo)
        else:
            lo, c = c, d
            d = lo + inv_phi * (hi - lo)
    if all(math.isinf(v) for v in cache.values()):
        raise OptimizationError(f"every candidate gain diverged at gamma={g}, eta={eta}")
    return _round_sig(math.exp(0.5 * (lo + hi)), digits)


# ------------------------------------------------------------ heating law


def heating_rate_check(gamma_tilde: float, cfg: SimConfig, eta: float = 1.0,
                       record_stride: int = 1) -> MomentEstimate:
    """Slope of the mean energy of the unfed-back oscillator versus time.

    Each trajectory's energy 0.5 (X^2 + P^2) is fit by least squares over
    ``[burn_in, t_total]``; the estimate is the mean slope over trajectories.
    """
    system = free_system(gamma_tilde, eta)
    stepper = _LinearStepper(system, np.eye(2), cfg.scheme is Scheme.WEAK_ORDER_2)
    _, records = _drive(stepper, cfg, 2, record_stride)
    t = np.arange(records[0].shape[0]) * record_stride * cfg.dt
    window = t >= cfg.burn_in
    if window.sum() < 3:
        raise DomainError("too few samples in the fit window for a slope")
    tw = t[window]
    tc = tw - tw.mean()
    slopes = np.array([
        np.dot(tc, 0.5 * (rec[window, 0] ** 2 + rec[window, 1] ** 2)) / np.dot(tc, tc)
        for rec in records
    ])
    err = slopes.std(ddof=1) / math.sqrt(slopes.size) if slopes.size > 1 else 0.0
    return MomentEstimate(float(slopes.mean()), float(err), int(slopes.size))
