"""Stationary second moments of linear SDEs with additive noise.

For ``dX = A X dt + sum_k b_k dW_k`` the stationary matrix S = E[X X^T]
solves ``A S + S A^T + sum_k b_k b_k^T = 0``.  The plain transpose is used
throughout, also for complex drifts: complex coordinates (a filter output and
its conjugate) are treated as independent variables, so S is the
non-conjugated product moment.

Two solvers are provided.  ``method="eigen"`` diagonalizes the drift and
applies E[q_i q_j] = -(c_i c_j)/(lambda_i + lambda_j) mode by mode;
``method="direct"`` solves the vectorized equation and also handles
non-diagonalizable drifts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .errors import DomainError, InstabilityError, SingularityError

_EIG_MATCH_TOL = 1e-8
_COND_LIMIT = 1e10
# eigenvalues within this (relative) distance of the imaginary axis count as neutral
_NEUTRAL_TOL = 1e-12


@dataclass(frozen=True)
class LinearSdeSystem:
    """Drift matrix plus one additive noise vector per independent Wiener process.

    ``masked_eigenvalues`` lists neutral modes (e.g. an overall translation)
    that carry no stationary distribution and are excluded by
    :func:`stationary_second_moments` unless another mask is passed.
    """

    drift: np.ndarray
    noise_vectors: tuple
    labels: tuple = ()
    masked_eigenvalues: tuple = field(default=())

    def __post_init__(self):
        drift = np.asarray(self.drift)
        if drift.ndim != 2 or drift.shape[0] != drift.shape[1]:
            raise DomainError(f"drift must be square, got shape {drift.shape}")
        vectors = tuple(np.asarray(v) for v in self.noise_vectors)
        for v in vectors:
            if v.shape != (drift.shape[0],):
                raise DomainError(f"noise vector of shape {v.shape} does not match dim {drift.shape[0]}")
        labels = tuple(self.labels) or tuple(f"x{i}" for i in range(drift.shape[0]))
        if len(labels) != drift.shape[0]:
            raise DomainError("one label per coordinate is required")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "noise_vectors", vectors)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "masked_eigenvalues", tuple(complex(z) for z in self.masked_eigenvalues))

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def noise_matrix(self) -> np.ndarray:
        """Noise vectors stacked as columns, shape (dim, n_wiener)."""
        if not self.noise_vectors:
            return np.zeros((self.dim, 0))
        return np.column_stack(self.noise_vectors)

    @property
    def diffusion(self) -> np.ndarray:
        b = self.noise_matrix
        return b @ b.T

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.drift) or np.iscomplexobj(self.noise_matrix)


@dataclass(frozen=True)
class SecondMomentMatrix:
    values: np.ndarray
    stable: bool
    eigenvalues: np.ndarray


def spectral_abscissa(drift) -> float:
    """Largest real part among the eigenvalues of ``drift``."""
    drift = np.asarray(drift)
    if drift.ndim != 2 or drift.shape[0] != drift.shape[1]:
        raise DomainError(f"drift must be square, got shape {drift.shape}")
    return float(np.max(np.linalg.eigvals(drift).real))


def lyapunov_residual(system: LinearSdeSystem, S: np.ndarray) -> np.ndarray:
    A = system.drift
    return A @ S + S @ A.T + system.diffusion


def _masked_indices(eigenvalues: np.ndarray, mask: Sequence[complex], scale: float) -> np.ndarray:
    hit = np.zeros(eigenvalues.shape, dtype=bool)
    for lam in mask:
        dist = np.abs(eigenvalues - lam)
        close = dist <= _EIG_MATCH_TOL * scale
        if not close.any():
            raise DomainError(f"masked eigenvalue {lam} is not an eigenvalue of the drift")
        hit |= close
    return hit


def _check_stable(eigenvalues: np.ndarray, scale: float = 1.0):
    if eigenvalues.size == 0:
        return
    worst = eigenvalues[np.argmax(eigenvalues.real)]
    if worst.real >= -_NEUTRAL_TOL * scale:
        raise InstabilityError(
            f"drift has eigenvalue {worst:.6g} with non-negative real part; no stationary state",
            eigenvalue=complex(worst),
        )


def _spectral_projector(A: np.ndarray, lam: complex) -> np.ndarray:
    """Projector onto the eigenspace of a semisimple eigenvalue ``lam``."""
    shifted = A - lam * np.eye(A.shape[0])
    right = null_space(shifted, rcond=1e-10)
    left = null_space(shifted.T, rcond=1e-10)
    if right.shape[1] == 0 or right.shape[1] != left.shape[1]:
        raise SingularityError(f"cannot isolate the eigenspace of {lam}")
    pairing = left.T @ right
    return right @ np.linalg.solve(pairing, left.T)


def _solve_vectorized(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    eye = np.eye(n)
    # row-major vec: vec(A S) = (A kron I) vec S, vec(S A^T) = (I kron A) vec S
    M = np.kron(A, eye) + np.kron(eye, A)
    S = np.linalg.solve(M, -Q.reshape(-1)).reshape(n, n)
    return 0.5 * (S + S.T)


def _direct(system: LinearSdeSystem, mask) -> np.ndarray:
    A = system.drift
    B = system.noise_matrix
    if mask:
        # move each neutral mode to eigenvalue -1 and strip its noise
        shifted = A.astype(complex)
        keep = np.eye(A.shape[0], dtype=complex)
        for lam in set(mask):
            proj = _spectral_projector(A, lam)
            shifted = shifted + (-1.0 - lam) * proj
            keep = keep - proj
        _check_stable(np.linalg.eigvals(shifted))
        A, B = shifted, keep @ B
    return _solve_vectorized(A, B @ B.T)


def _eigen(system: LinearSdeSystem, hit: np.ndarray, eigenvalues: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    if np.linalg.cond(vecs) > _COND_LIMIT:
        raise SingularityError("drift is not diagonalizable to working precision; use method='direct'")
    keep = ~hit
    lam = eigenvalues[keep]
    V = vecs[:, keep]
    c = np.linalg.solve(vecs, system.noise_matrix.astype(complex))[keep]
    Eq = -(c @ c.T) / (lam[:, None] + lam[None, :])
    S = V @ Eq @ V.T
    return 0.5 * (S + S.T)


def stationary_second_moments(
    system: LinearSdeSystem,
    mask: Optional[Sequence[complex]] = None,
    method: str = "direct",
) -> SecondMomentMatrix:
    """Stationary E[X X^T] of ``system``.

    Parameters
    ----------
    system : LinearSdeSystem
    mask : sequence of complex, optional
        Eigenvalues whose modes are excluded; defaults to
        ``system.masked_eigenvalues``.  Pass ``()`` to mask nothing.
    method : {"direct", "eigen"}

    Raises
    ------
    InstabilityError
        If an unmasked eigenvalue has non-negative real part.
    SingularityError
        For ``method="eigen"`` on a defective drift.
    """
    if method not in ("direct", "eigen"):
        raise DomainError(f"unknown method {method!r}")
    mask = tuple(system.masked_eigenvalues if mask is None else (complex(z) for z in mask))
    eigenvalues, vecs = np.linalg.eig(system.drift)
    scale = max(1.0, float(np.abs(system.drift).max()))
    hit = _masked_indices(eigenvalues, mask, scale) if mask else np.zeros(eigenvalues.shape, bool)
    _check_stable(eigenvalues[~hit], scale)

    if method == "eigen":
        S = _eigen(system, hit, eigenvalues, vecs)
    else:
        S = _direct(system, mask)
    if not system.is_complex and np.iscomplexobj(S):
        S = S.real
    return SecondMomentMatrix(values=S, stable=True, eigenvalues=eigenvalues[~hit])
