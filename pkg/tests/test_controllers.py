import math

import numpy as np
import pytest

from feedback_cooling import controllers as C
from feedback_cooling.core import DimensionlessParams, MethodId, zero_point_energy
from feedback_cooling.errors import DomainError, InstabilityError
from feedback_cooling.moments import spectral_abscissa
from feedback_cooling.systems import bp_energy_from_moments, lpf_energy_from_moments


def P(g, eta, s=None, k=None):
    return DimensionlessParams(g, eta, s_tilde=s, g_tilde=k)


# ------------------------------------------------------------------ LPF

def test_lpf_system_shape():
    sys_ = C.lpf_system(P(0.3, 0.6, 0.7))
    np.testing.assert_array_equal(sys_.drift[2], [0.7, 0.0, -0.7])
    assert sys_.masked_eigenvalues == (0j,)


def test_lpf_perfect_detection_has_no_virtual_channel():
    sys_ = C.lpf_system(P(0.3, 1.0, 0.7))
    np.testing.assert_array_equal(sys_.noise_vectors[1], np.zeros(3))


def test_lpf_system_requires_measurement():
    with pytest.raises(DomainError):
        C.lpf_system(P(0.0, 1.0, 0.5))


def test_lpf_optimal_s_value():
    assert C.lpf_optimal_s(0.1, 1.0) == pytest.approx(0.1 / math.sqrt(1.005), rel=1e-15)
    assert C.lpf_optimal_s(0.1, 1.0) == pytest.approx(0.0997509, abs=1e-7)
    assert C.lpf_optimal_s(0.0, 0.5) == 0.0


@pytest.mark.parametrize("g", np.linspace(0.05, 10, 12))
@pytest.mark.parametrize("eta", [0.05, 0.3, 0.7, 1.0])
def test_lpf_optimal_s_below_sqrt2(g, eta):
    assert C.lpf_optimal_s(g, eta) < math.sqrt(2)


def test_lpf_energy_at_optimum():
    g, eta = 0.1, 1.0
    s = C.lpf_optimal_s(g, eta)
    e = C.lpf_energy(P(g, eta, s))
    assert e == pytest.approx(0.5 * math.sqrt(1 + g * g / 2), rel=1e-14)
    assert e == pytest.approx(0.501248, abs=1e-6)
    assert e - 0.5 == pytest.approx(C.lpf_min_occupation(g, eta), abs=1e-14)
    assert C.lpf_energy(P(g, eta, 2 * s)) > e


def test_lpf_energy_rejects_zero_cutoff():
    with pytest.raises(DomainError):
        C.lpf_energy(P(0.1, 1.0, 0.0))


def test_lpf_min_occupation_values():
    assert C.lpf_min_occupation(0.0, 1.0) == 0.0
    assert C.lpf_min_occupation(0.1, 1.0) == pytest.approx(0.0012484, abs=1e-7)
    assert C.lpf_min_occupation(0.1, 0.5) == pytest.approx(0.207990, abs=1e-6)
    assert C.lpf_min_occupation(0.0, 0.3) == pytest.approx(C.fundamental_bound(0.3), rel=1e-15)


def test_lpf_closed_form_matches_moments():
    rng = np.random.default_rng(7)
    for _ in range(50):
        g, eta, s = 10 ** rng.uniform(-2, 0.6), rng.uniform(0.1, 1.0), 10 ** rng.uniform(-1.5, 0.7)
        p = P(g, eta, s)
        assert lpf_energy_from_moments(p) == pytest.approx(C.lpf_energy(p), rel=1e-8)


def test_lpf_result_bundle():
    res = C.lpf_result(0.1, 0.9)
    assert res.method is MethodId.LPF
    assert res.energy.zero_point == zero_point_energy(0.1)
    assert 0 < res.purity <= 1


# ------------------------------------------------------------- band-pass

def test_bp_zero_gain_decouples_oscillator():
    sys_ = C.bp_system(P(0.2, 0.8, 0.5, 0.0))
    np.testing.assert_array_equal(sys_.drift[:2, 2:], np.zeros((2, 2)))


def test_bp_eigenvalues_closed_form():
    numeric = np.linalg.eigvals(C.bp_system(P(0.1, 1.0, 0.5, 0.2)).drift)
    closed = C.bp_eigenvalues(0.5, 0.2)
    key = lambda z: (round(z.real, 8), round(z.imag, 8))
    for a, b in zip(sorted(numeric, key=key), sorted(closed, key=key)):
        assert abs(a - b) < 1e-10


def test_bp_unstable_point():
    assert spectral_abscissa(C.bp_system(P(0.1, 1.0, 1.0, 1.0)).drift) >= 0
    assert not C.bp_is_stable(1.0, 1.0)


def test_bp_stability_examples():
    assert C.bp_is_stable(1.0, 0.49)
    assert not C.bp_is_stable(1.0, 0.5)
    assert C.bp_is_stable(0.2, 1.0)
    assert not C.bp_is_stable(1.0, 0.0)
    with pytest.raises(DomainError):
        C.bp_is_stable(0.0, 0.1)


def test_bp_stability_matches_eigenvalues_on_grid():
    for s in np.linspace(0.1, 4.0, 20):
        bound = 0.25 * (s + 1 / s)
        for k in np.linspace(0.02, 2.5, 20):
            if abs(k - bound) < 1e-3 * bound:
                continue
            abscissa = spectral_abscissa(C.bp_system(P(0.1, 1.0, s, k)).drift)
            assert C.bp_is_stable(s, k) == (abscissa < 0), (s, k, abscissa)


def test_bp_closed_form_matches_moments():
    rng = np.random.default_rng(11)
    for _ in range(50):
        g, eta, s = 10 ** rng.uniform(-2, 0.6), rng.uniform(0.1, 1.0), 10 ** rng.uniform(-1.3, 0.7)
        k = rng.uniform(0.02, 0.98) * 0.25 * (s + 1 / s)
        p = P(g, eta, s, k)
        assert C.bp_energy_closed_form(p) == pytest.approx(bp_energy_from_moments(p), rel=1e-8)


def test_bp_closed_form_rejects_unstable():
    with pytest.raises(InstabilityError) as info:
        C.bp_energy_closed_form(P(0.1, 1.0, 1.0, 0.6))
    assert info.value.eigenvalue.real >= 0


def test_bp_pole_lies_on_stability_boundary():
    # 4 g s - s^2 - 1 = 0 is exactly g = (s + 1/s)/4
    s = 0.7
    with pytest.raises(InstabilityError):
        C.bp_energy_closed_form(P(0.1, 1.0, s, (s * s + 1) / (4 * s)))


def test_bp_energy_on_defective_point():
    # s = 4g: eigenvalues collide; closed form and Lyapunov solve still agree
    p = P(0.1, 1.0, 0.4, 0.1)
    assert C.bp_energy(p) == pytest.approx(bp_energy_from_moments(p), rel=1e-8)


def test_bp_expansion_values():
    assert C.bp_energy_expansion(0.0, 0.36) == pytest.approx(1 / 1.2)
    expected = 0.5 + 0.1875 * 0.1 ** (2 / 3) + 0.3125 * 0.1 ** (4 / 3)
    assert C.bp_energy_expansion(0.1, 1.0) == pytest.approx(expected, rel=1e-15)
    assert C.bp_energy_expansion(0.1, 1.0) - 0.5 == pytest.approx(0.0549, abs=1e-4)


def brute_force_bp_minimum(g, eta, n=41, zooms=6):
    """Repeatedly refined log grid over the stable region, energies from the Lyapunov solve."""
    centre = np.log(C.bp_expansion_optimum(g, eta))
    half = 1.2
    best = (math.inf, centre)
    for _ in range(zooms):
        offsets = np.linspace(-half, half, n)
        for ds in offsets:
            for dk in offsets:
                s, k = np.exp(centre + (ds, dk))
                if C.bp_is_stable(s, k):
                    e = bp_energy_from_moments(P(g, eta, s, k))
                    if e < best[0]:
                        best = (e, centre + (ds, dk))
        centre = best[1]
        half *= 4.0 / n
    return best[0]


def test_bp_minimize_against_brute_force():
    res = C.bp_minimize(0.1, 1.0)
    grid = brute_force_bp_minimum(0.1, 1.0)
    assert res.energy.total_energy <= grid + 1e-12
    assert res.energy.total_energy == pytest.approx(grid, abs=1e-10)
    assert 0.045 <= res.occupation <= 0.060
    assert res.occupation == pytest.approx(0.054237, abs=1e-6)


def test_bp_minimize_expansion_regime():
    res = C.bp_minimize(0.1, 0.3)
    expansion = C.bp_energy_expansion(0.1, 0.3) - 0.5
    assert abs(expansion - res.occupation) / res.occupation <= 0.05


def test_bp_minimize_small_gamma_reaches_bound():
    res = C.bp_minimize(1e-4, 0.5)
    assert abs(res.occupation - C.fundamental_bound(0.5)) < 1e-3
    assert C.bp_is_stable(res.optimal_params.s_tilde, res.optimal_params.g_tilde)


def test_bp_minimize_requires_measurement():
    with pytest.raises(DomainError):
        C.bp_minimize(0.0, 0.5)


# ------------------------------------------------------------------- LQG

def test_lqg_energy_values():
    assert C.lqg_energy(0.0, 1.0) == 0.5
    assert C.lqg_energy(0.1, 1.0) - 0.5 == pytest.approx(0.025561, abs=1e-6)
    assert C.lqg_energy(0.0, 0.4) == pytest.approx(0.5 / math.sqrt(0.4), rel=1e-15)


def test_lqg_covariances():
    c = C.lqg_conditioned_covariances(0.0, 1.0)
    assert (c.vx, c.vp, c.vcov) == pytest.approx((0.5, 0.5, 0.0))
    c = C.lqg_conditioned_covariances(1.0, 1.0)
    assert c.determinant == pytest.approx(0.25, abs=1e-12)
    c = C.lqg_conditioned_covariances(0.32, 0.34)
    assert c.determinant == pytest.approx(1 / (4 * 0.34), abs=1e-10)


def test_lqg_energy_is_conditioned_floor_plus_feedback_cost():
    # infinite gain: energy = (vx + vp)/2 + the mean-value fluctuation left by the innovation
    g, eta = 0.7, 0.6
    c = C.lqg_conditioned_covariances(g, eta)
    xi = math.sqrt(1 + eta * g * g)
    assert C.lqg_energy(g, eta) == pytest.approx(0.5 * (c.vx + c.vp) + g / (2 * (xi + 1)), rel=1e-14)


def test_fundamental_bound_values():
    assert C.fundamental_bound(1.0) == 0.0
    assert C.fundamental_bound(0.3) == pytest.approx(0.412871, abs=1e-6)
    assert C.fundamental_bound(0.25) == 0.5


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.9, 1.0])
@pytest.mark.parametrize("g", [0.01, 0.05, 0.1])
def test_closed_form_ordering(eta, g):
    n_lpf = C.lpf_min_occupation(g, eta)
    n_lqg = C.lqg_energy(g, eta) - 0.5
    n_bp = C.bp_minimize(g, eta).occupation
    assert C.fundamental_bound(eta) <= n_lpf + 1e-12
    assert n_lpf <= n_lqg + 1e-6
    assert n_lqg <= n_bp + 1e-6


@pytest.mark.parametrize("eta", [0.3, 0.4, 0.5])
def test_closed_forms_reach_bound(eta):
    bound = C.fundamental_bound(eta)
    assert abs(C.lpf_min_occupation(1e-4, eta) - bound) < 1e-3
    assert abs(C.lqg_energy(1e-4, eta) - 0.5 - bound) < 1e-3
    assert abs(C.bp_minimize(1e-4, eta).occupation - bound) < 1e-3


def test_method_result_dispatch():
    for m in ("lpf", "lqg", "cd-bandpass"):
        res = C.method_result(m, 0.05, 0.9)
        assert res.method is MethodId.parse(m)
        assert res.occupation >= C.fundamental_bound(0.9) - 1e-12
