import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from packetscatter.barrier import BarrierProfile
from packetscatter.errors import EvanescentFronting, OutOfRange
from packetscatter.transfer import (
    CRITICAL_SWITCH,
    bin_matrix,
    compose,
    partial_matrix,
    plane_wave_amplitudes,
    psi_stationary,
    reflectivity_via_norm,
)

# high-precision closed forms evaluated with mpmath
TUNNEL_Q2_W1_K1 = 0.41997434161402608
ABOVE_Q05_W2_K1 = 0.8912972171417729
FRESNEL_Q05_K1 = 0.17157287525381


def test_free_bin_is_rotation():
    M = bin_matrix(0.0, np.pi / 2, 1.0)
    assert np.allclose(M.as_array(), [[0, 1], [-1, 0]], atol=1e-15)


def test_fresnel_step():
    sol = plane_wave_amplitudes(BarrierProfile((), 0.0, 0.5), 1.0)
    assert abs(sol.r - FRESNEL_Q05_K1) < 1e-12
    b = np.sqrt(0.5)
    assert abs(sol.r - (1 - b) / (1 + b)) < 1e-12


def test_single_barrier_tunneling():
    sol = plane_wave_amplitudes(BarrierProfile(((2.0, 1.0),)), 1.0)
    assert abs(sol.T - TUNNEL_Q2_W1_K1) < 1e-10
    sol = plane_wave_amplitudes(BarrierProfile(((0.5, 2.0),)), 1.0)
    assert abs(sol.T - ABOVE_Q05_W2_K1) < 1e-10


def test_hole_barrier_reflectivity_zeros(hole):
    R = plane_wave_amplitudes(hole, np.array([0.5, 1.0])).R
    assert np.all(R < 1e-20)
    assert plane_wave_amplitudes(hole, 0.75).R == pytest.approx(0.6660050184771045, rel=1e-10)


def test_small_theta_switch_is_continuous():
    k = 1.0
    # straddle the switch from both sides of the critical wave vector
    for sgn in (1, -1):
        w = 1.0
        q_edge = k * k - sgn * (CRITICAL_SWITCH * 1.0001) ** 2
        q_in = k * k - sgn * (CRITICAL_SWITCH * 0.9999) ** 2
        a, b = bin_matrix(q_edge, w, k).as_array(), bin_matrix(q_in, w, k).as_array()
        assert np.allclose(a, b, atol=1e-12)
    at_critical = bin_matrix(1.0, 2.0, 1.0).as_array()
    assert np.allclose(at_critical, [[1, 2], [0, 1]])


def test_partial_matrix_endpoints(hole):
    k = np.linspace(0.1, 2, 7)
    full = compose(hole, k).as_array()
    assert np.allclose(partial_matrix(hole, k, hole.length).as_array(), full, atol=1e-12)
    assert np.allclose(partial_matrix(hole, k, 0.0).as_array(), np.eye(2))
    with pytest.raises(OutOfRange):
        partial_matrix(hole, 1.0, hole.length + 0.1)


def test_psi_continuity_at_edges(hole):
    k = np.array([0.3, 0.9, 1.7])[:, None]
    eps = 1e-7
    for x in hole.edges:
        lo = psi_stationary(hole, k, np.array([x - eps]))
        hi = psi_stationary(hole, k, np.array([x + eps]))
        assert np.allclose(lo, hi, atol=1e-5)


def test_psi_solves_stationary_equation(hole):
    k = 0.8
    h = 1e-3
    x = np.linspace(0.2, hole.length - 0.2, 50)
    x = x[np.min(np.abs(x[:, None] - hole.edges[None, :]), axis=1) > 3 * h]
    p = lambda z: psi_stationary(hole, k, z)
    d2 = (p(x + h) - 2 * p(x) + p(x - h)) / h**2
    resid = -d2 + (hole.q_at(x) - k * k) * p(x)
    assert np.max(np.abs(resid)) < 1e-4


def test_evanescent_fronting_rejected():
    with pytest.raises(EvanescentFronting):
        plane_wave_amplitudes(BarrierProfile((), q_fronting=2.0), 1.0)


def test_total_reflection_below_backing_critical():
    sol = plane_wave_amplitudes(BarrierProfile(((0.1, 1.0),), 0.0, 1.0), np.array([0.3, 0.7]))
    assert np.allclose(sol.R, 1.0, atol=1e-12)
    assert not sol.propagating.any()


def test_gram_identities(hole):
    sol = plane_wave_amplitudes(hole, np.linspace(0.05, 3, 200))
    assert np.allclose(sol.gamma_**2, sol.alpha * sol.beta - 1, rtol=1e-9, atol=1e-9)
    assert np.allclose((sol.sigma_sum - 2) / (sol.sigma_sum + 2), sol.R, atol=1e-12)


profiles = st.lists(st.tuples(st.floats(-3, 3), st.floats(0.01, 4)), min_size=0, max_size=8)


@settings(max_examples=200, deadline=None)
@given(profiles, st.floats(0.01, 5), st.floats(-1, 0.5))
def test_flux_and_norm_route(bins, k, qb):
    prof = BarrierProfile(tuple(bins), 0.0, qb)
    sol = plane_wave_amplitudes(prof, k)
    assert abs(sol.matrix.det - 1) < 1e-9 * max(1.0, np.max(np.abs(sol.matrix.as_array())) ** 2)
    if k * k > qb:
        assert abs(sol.flux_residual()) < 1e-9
        assert abs(reflectivity_via_norm(prof, k) - sol.R) < 1e-9
