"""Hypothesis checks of the structural invariants."""

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from feedback_cooling import calibrate as K
from feedback_cooling import cli
from feedback_cooling.controllers import (
    bp_energy,
    bp_energy_closed_form,
    bp_is_stable,
    fundamental_bound,
    lpf_energy,
    lpf_min_occupation,
    lqg_energy,
)
from feedback_cooling.core import (
    DimensionlessParams,
    GaussianPureState,
    squeeze_rhs,
    stationary_squeeze,
    stationary_wavefunction_covariances,
    wavefunction_covariances,
    z_evolution,
    z_fixed_point,
    zero_point_energy,
)
from feedback_cooling.errors import DomainError
from feedback_cooling.moments import LinearSdeSystem, lyapunov_residual, stationary_second_moments
from feedback_cooling.purity import bp_purity, lpf_purity, lqg_purity
from feedback_cooling.systems import bp_physical_moments, lpf_observable_moments, lpf_system

gammas = st.floats(0.0, 10.0)
pos_gammas = st.floats(1e-3, 4.0)
etas = st.floats(0.05, 1.0)
widths = st.floats(0.05, 20.0)
chirps = st.floats(-20.0, 20.0)


@given(widths, chirps)
def test_pure_state_determinant(r, d):
    c = wavefunction_covariances(GaussianPureState(0.0, 0.0, r, d))
    assert abs(c.determinant - 0.25) <= c.heisenberg_slack


@given(gammas)
def test_squeeze_is_fixed_point(g):
    r, d = stationary_squeeze(g)
    dr, dd = squeeze_rhs(r, d, g)
    assert abs(dr) <= 1e-12 * max(1.0, g) and abs(dd) <= 1e-12 * max(1.0, g)


def test_zero_point_monotone_on_grid():
    values = [zero_point_energy(0.1 * k) for k in range(41)]
    assert all(b >= a for a, b in zip(values, values[1:]))


@given(gammas, gammas)
def test_zero_point_monotone(a, b):
    lo, hi = sorted((a, b))
    assert zero_point_energy(lo) <= zero_point_energy(hi)
    assert zero_point_energy(lo) >= 0.5


def _mobius_distance(z, fixed):
    # |z - f| / |z + f| decays as exp(-2 D t) exactly, with no oscillation
    return abs(z - fixed) / abs(z + fixed)


@given(pos_gammas, st.floats(-5.0, -0.05), st.floats(-5.0, 5.0))
def test_z_converges(g, re, im):
    z0 = complex(re, im)
    fixed = z_fixed_point(g)
    assume(abs(z0 - fixed) > 1e-6)
    dist = [_mobius_distance(z_evolution(z0, g, t), fixed) for t in (0.0, 5.0, 10.0, 20.0)]
    assert dist[0] >= dist[1] >= dist[2] >= dist[3]


@given(st.floats(1.0, 4.0), st.floats(-5.0, -0.05), st.floats(-5.0, 5.0))
def test_z_distance_shrinks_for_strong_measurement(g, re, im):
    z0 = complex(re, im)
    fixed = z_fixed_point(g)
    assume(abs(z0 - fixed) > 1e-6)
    dist = [abs(z_evolution(z0, g, t) - fixed) for t in (5.0, 10.0, 20.0)]
    assert dist[0] >= dist[1] >= dist[2]


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_lyapunov_residual_small(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    A -= (np.max(np.linalg.eigvals(A).real) + 0.1 + rng.uniform()) * np.eye(n)
    system = LinearSdeSystem(A, tuple(rng.normal(size=n) for _ in range(2)))
    S = stationary_second_moments(system).values
    assert np.abs(lyapunov_residual(system, S)).max() <= 1e-10 * max(1.0, np.abs(S).max())
    assert np.allclose(S, S.T)
    assert np.linalg.eigvalsh(S).min() >= -1e-10 * np.abs(S).max()


@given(pos_gammas, etas, st.floats(0.01, 5.0))
def test_lpf_residual_and_positivity(g, eta, s):
    system = lpf_system(DimensionlessParams(g, eta, s_tilde=s))
    S = stationary_second_moments(system).values
    # the masked translation mode carries noise, so only the observable block is checked for PSD
    M = lpf_observable_moments(DimensionlessParams(g, eta, s_tilde=s))
    assert np.linalg.eigvalsh(M).min() >= -1e-10 * np.abs(M).max()
    assert np.isfinite(S).all()


bp_points = st.tuples(pos_gammas, etas, st.floats(0.05, 5.0), st.floats(0.01, 0.99))


@given(bp_points)
def test_bandpass_moments_physical(point):
    g, eta, s, frac = point
    k = frac * 0.25 * (s + 1.0 / s)
    p = DimensionlessParams(g, eta, s_tilde=s, g_tilde=k)
    M = bp_physical_moments(p)
    assert np.linalg.eigvalsh(M).min() >= -1e-10 * np.abs(M).max()
    assert bp_energy(p) == pytest.approx(bp_energy_closed_form(p), rel=1e-7)


@given(st.floats(0.05, 5.0), st.floats(-1.0, 3.0))
def test_bp_stability_sign(s, k):
    assume(abs(k - 0.25 * (s + 1 / s)) > 1e-6 and abs(k) > 1e-6)
    from feedback_cooling.controllers import bp_eigenvalues

    assert bp_is_stable(s, k) == (np.max(bp_eigenvalues(s, k).real) < 0)


@given(pos_gammas, etas, st.floats(0.01, 5.0))
def test_purity_bounds_lpf(g, eta, s):
    p = lpf_purity(g, eta, s)
    assert 0.0 < p <= math.sqrt(eta) + 1e-9
    assert p <= lqg_purity(g, eta) + 1e-9


@given(bp_points)
def test_purity_bounds_bp(point):
    g, eta, s, frac = point
    k = frac * 0.25 * (s + 1.0 / s)
    p = bp_purity(g, eta, s, k)
    base = stationary_wavefunction_covariances(g)
    assert 0.0 < p <= 1.0 + 1e-9
    assert p <= 0.5 / math.sqrt(base.determinant) + 1e-12


@given(pos_gammas, etas, st.floats(0.01, 5.0))
def test_energies_above_bound(g, eta, s):
    bound = fundamental_bound(eta)
    assert lpf_energy(DimensionlessParams(g, eta, s_tilde=s)) - 0.5 >= bound - 1e-9
    assert lpf_min_occupation(g, eta) >= bound - 1e-9
    assert lqg_energy(g, eta) - 0.5 >= bound - 1e-9
    if g <= 1.0:
        # ordering is a weak-measurement statement; it reverses between g = 2 and g = 3
        assert lpf_min_occupation(g, eta) <= lqg_energy(g, eta) - 0.5 + 1e-9


@given(st.floats(-1.0, 10.0), st.floats(0.0, 1.5))
def test_params_domain(g, eta):
    valid = g >= 0 and 0 < eta <= 1
    if valid:
        DimensionlessParams(g, eta)
    else:
        with pytest.raises(DomainError):
            DimensionlessParams(g, eta)


@given(st.floats(1e-3, 10.0), st.floats(1e-20, 1e-14), st.floats(1e3, 1e7))
def test_heating_round_trip(g, mass, omega):
    rate = K.heating_rate_from_gamma_tilde(g, mass, omega)
    assert K.gamma_from_heating_rate(rate, mass, omega) == pytest.approx(g, rel=1e-12)


@given(st.integers(1, 400), st.integers(1, 50), st.integers(0, 30))
def test_grid_parsing(start, step, count):
    lo, dx = start / 100, step / 100
    hi = lo + count * dx
    grid = cli.parse_grid(f"{lo!r}:{dx!r}:{hi!r}")
    assert len(grid) == count + 1
    assert grid[0] == lo and grid[-1] == pytest.approx(hi, rel=1e-12)
    assert all(b > a for a, b in zip(grid, grid[1:]))
