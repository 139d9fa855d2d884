import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from packetscatter.barrier import BarrierProfile
from packetscatter.errors import GridTooCoarse, InvariantViolation, OutOfRange, WindowTooSmall, ZeroWidth
from packetscatter.packet import PacketSpec, kgrid, normalized_pdf
from packetscatter.spectrum import (
    ResolutionModel,
    Spectrum,
    default_window,
    gamma_norm,
    instrument_kernel,
    plane_wave_spectra,
    reflection_amplitude_asymptotic,
    reflection_amplitude_timed,
    reflectivity_coherent,
    reflectivity_zeros,
    resolution_convolve,
    transmission_amplitude_asymptotic,
    transmission_amplitude_timed,
)
from packetscatter.transfer import plane_wave_amplitudes


def test_gamma_values():
    assert gamma_norm(0.025) == pytest.approx(0.0011224195132822919, rel=1e-14)
    assert gamma_norm(0.25) == pytest.approx(0.011224195132822919, rel=1e-14)
    for dk in (0.025, 0.25, 0.4):
        sp = PacketSpec(1.0, dk) if dk < 0.3 else PacketSpec(2.0, dk)
        assert 4 * math.pi**2 * gamma_norm(dk) * normalized_pdf(sp.kbar, sp) == pytest.approx(1, rel=1e-14)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([0.1, 0.2], [0.1, 0.2], "bogus")
    with pytest.raises(ValueError):
        Spectrum([0.2, 0.1], [0.1, 0.2], "R_pw")
    with pytest.raises(InvariantViolation):
        Spectrum([0.1, 0.2], [0.1, 1.1], "R_coh")


def test_plane_wave_spectra_flux(hole):
    R, T = plane_wave_spectra(hole, np.linspace(0.01, 2, 300))
    assert np.allclose(R.values + T.values, 1, atol=1e-10)
    R, T = plane_wave_spectra(BarrierProfile((), 0.0, 0.0), np.linspace(0.01, 2, 30))
    assert np.all(R.values == 0) and np.allclose(T.values, 1)
    R, T = plane_wave_spectra(BarrierProfile(((0.2, 1.0),), 0.0, 1.0), np.array([0.5, 0.9]))
    assert np.allclose(R.values, 1) and np.all(T.values == 0)


def test_coherent_reflectivity(hole):
    k = np.linspace(0.01, 2.5, 5000)
    for dk in (0.025, 0.25):
        for kbar in (0.25, 0.5, 0.75, 1.0, 1.25):
            if kbar < 3 * dk:
                continue
            rc = reflectivity_coherent(hole, PacketSpec(kbar, dk), k)
            assert rc.values.max() <= 1
            Rpw = plane_wave_amplitudes(hole, k).R
            assert np.all(rc.values <= Rpw + 1e-15)
    zeros = np.array([0.5, 1.0])
    rc = reflectivity_coherent(hole, PacketSpec(1.0, 0.025), zeros)
    assert np.all(rc.values < 1e-25)


def test_zero_finder(hole):
    z = reflectivity_zeros(hole, 0.05, 3.0)
    assert np.allclose(z[:2], [0.5, 1.0], atol=1e-9)
    assert z.size == 5
    assert np.all(plane_wave_amplitudes(hole, z).R < 1e-10)


def test_asymptotic_amplitude_properties(hole):
    sp = PacketSpec(2.0, 0.4, -15.0)
    k = np.linspace(0.3, 3.0, 50)
    a = reflection_amplitude_asymptotic(sp, hole, k)
    b = reflection_amplitude_asymptotic(PacketSpec(2.0, 0.4, -40.0), hole, k)
    assert np.allclose(np.abs(a), np.abs(b), rtol=1e-14)
    peak = reflection_amplitude_asymptotic(sp, hole, 2.0)
    assert abs(peak) == pytest.approx(2 * math.pi * abs(plane_wave_amplitudes(hole, 2.0).r), rel=1e-14)
    assert abs(reflection_amplitude_asymptotic(sp, hole, 1.0)) < 1e-14
    empty = BarrierProfile(())
    t = transmission_amplitude_asymptotic(sp, empty, k)
    assert np.allclose(t, 2 * math.pi * np.exp(-1j * k * sp.x0) * np.exp(-((k - 2) ** 2) / (2 * 0.16)))


def test_timed_reflection_empty_barrier():
    sp = PacketSpec(1.5, 0.4, -15.0)
    r = reflection_amplitude_timed(BarrierProfile(()), sp, np.linspace(1.0, 2.0, 11), 30.0)
    # the incident piece is not exactly orthogonal to exp(ikx) on a finite window
    assert np.max(np.abs(r)) < 1e-5


def test_timed_window_checks(hole):
    sp = PacketSpec(1.5, 0.4, -15.0)
    lo, hi = default_window(hole, sp, 10.0)
    with pytest.raises(WindowTooSmall):
        reflection_amplitude_timed(hole, sp, 1.5, 10.0, x_window=(lo + 5, hi))
    with pytest.raises(WindowTooSmall):
        # the density check catches a packet that reaches the edge of an allowed window
        reflection_amplitude_timed(hole, sp, 1.5, 10.0, tail_tol=1e-300)


@pytest.mark.slow
def test_timed_transmission_converges_single_bin():
    prof = BarrierProfile(((0.3, 2.0),))
    sp = PacketSpec(1.2, 0.3, -15.0)
    k = np.array([sp.kbar])
    timed = transmission_amplitude_timed(prof, sp, k, 150.0)
    asym = transmission_amplitude_asymptotic(sp, prof, k)
    assert abs(abs(timed[0]) / abs(asym[0]) - 1) < 0.05


@pytest.mark.slow
def test_timed_transmission_nonvacuum_backing():
    # outgoing wave vector kappa in the backing carries the Jacobian kappa/k
    prof = BarrierProfile(((0.3, 2.0),), 0.0, 0.5)
    sp = PacketSpec(1.4, 0.3, -15.0)
    kappa = np.array([0.9, 1.1, 1.3])
    timed = transmission_amplitude_timed(prof, sp, kappa, 150.0)
    asym = transmission_amplitude_asymptotic(sp, prof, kappa)
    assert np.allclose(np.abs(timed), np.abs(asym), rtol=1e-3)


def test_instrument_kernel():
    m = ResolutionModel(0.05)
    assert instrument_kernel(0.0, m) == 1.0
    assert instrument_kernel(0.05, m) == pytest.approx(math.exp(-1))
    assert instrument_kernel(-0.03, m) == instrument_kernel(0.03, m)
    with pytest.raises(ZeroWidth):
        instrument_kernel(0.0, ResolutionModel(0.0))
    with pytest.raises(ValueError):
        ResolutionModel(-1.0)


def test_convolve_constant_and_limits():
    k = np.linspace(0.01, 3.0, 6000)
    c = 0.3
    rc = Spectrum(k, np.full(k.size, c), "R_coh")
    m = ResolutionModel(0.05)
    rm = resolution_convolve(rc, m, np.linspace(1, 2, 11))
    assert np.allclose(rm.values, c * math.sqrt(math.pi) * 0.05, rtol=1e-6)
    same = resolution_convolve(rc, ResolutionModel(0.0))
    assert np.array_equal(same.values, rc.values)
    with pytest.raises(GridTooCoarse):
        resolution_convolve(Spectrum(k[::50], np.full(k[::50].size, c), "R_coh"), m)
    with pytest.raises(OutOfRange):
        resolution_convolve(rc, m, [3.5])


def test_convolve_delta_limit(hole):
    k = np.linspace(0.01, 2.0, 40000)
    rc = reflectivity_coherent(hole, PacketSpec(1.25, 0.25), k)
    d = 5e-4
    rm = resolution_convolve(rc, ResolutionModel(d), k[2000:-2000])
    assert np.allclose(rm.values / (math.sqrt(math.pi) * d), rc.values[2000:-2000], atol=1e-5)


def test_smearing_fills_zeros(hole):
    k = np.linspace(0.005, 2.0, 8000)
    for kbar in (0.5, 1.0):
        rc = reflectivity_coherent(hole, PacketSpec(kbar, 0.025), k)
        rm = resolution_convolve(rc, ResolutionModel(0.05))
        window = np.abs(k - kbar) < 0.02
        assert reflectivity_coherent(hole, PacketSpec(kbar, 0.025), [kbar]).values[0] < 1e-25
        assert rm.values[window].min() > 1e-4


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2**31 - 1))
def test_convolve_linear(a, b, seed):
    r = np.random.default_rng(seed)
    k = np.linspace(0.1, 2.0, 800)
    s1 = Spectrum(k, r.uniform(0, 1, k.size), "R_coh")
    s2 = Spectrum(k, r.uniform(0, 1, k.size), "R_coh")
    m = ResolutionModel(0.05)
    combo = Spectrum(k, (a * s1.values + b * s2.values) / 10 + 0.5, "R_coh")
    lhs = resolution_convolve(combo, m).values
    base = resolution_convolve(Spectrum(k, np.full(k.size, 0.5), "R_coh"), m).values
    rhs = (a * resolution_convolve(s1, m).values + b * resolution_convolve(s2, m).values) / 10 + base
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_spectrum_serialization(hole):
    rc = reflectivity_coherent(hole, PacketSpec(1.0, 0.25), np.linspace(0.1, 1, 4))
    buf = io.StringIO()
    rc.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# kind=R_coh kbar=1 dk=0.25 gamma=")
    assert lines[1] == "k,value"
    assert float(lines[2].split(",")[1]) == rc.values[0]
    d = json.loads(json.dumps(rc.to_dict()))
    assert d["columns"]["value"] == rc.values.tolist()
    amp = Spectrum([1.0, 2.0], [1 + 1j, 2j], "r_t")
    buf = io.StringIO()
    amp.write_csv(buf)
    assert buf.getvalue().splitlines()[1] == "k,re,im,abs"
