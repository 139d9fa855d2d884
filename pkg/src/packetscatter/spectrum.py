"""Reflection and transmission spectra of packet classes.

Amplitudes are projections of the packet onto plane waves,
``r(kappa, t) = int exp(+i kappa x) Psi(x, t) dx`` for the reflected side and
``int exp(-i kappa x) Psi dx`` for the transmitted side. The late-time limits
are taken analytically rather than through a regularised principal value.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .barrier import BarrierProfile
from .errors import GridTooCoarse, InvariantViolation, OutOfRange, WindowTooSmall, ZeroWidth
from .packet import PacketSpec, KGrid, assemble_packet, gaussian_weight, kgrid, normalized_pdf, sigma_t
from .quadrature import odd, simpson_weights
from .transfer import plane_wave_amplitudes

__all__ = [
    "Spectrum",
    "ResolutionModel",
    "KINDS",
    "plane_wave_spectra",
    "reflection_amplitude_timed",
    "transmission_amplitude_timed",
    "reflection_amplitude_asymptotic",
    "transmission_amplitude_asymptotic",
    "default_window",
    "x_grid",
    "kgrid_for_window",
    "gamma_norm",
    "reflectivity_coherent",
    "instrument_kernel",
    "resolution_convolve",
    "reflectivity_zeros",
]

KINDS = ("R_pw", "T_pw", "r_t", "R_coh", "R_meas")
_REAL_KINDS = ("R_pw", "T_pw", "R_coh", "R_meas")
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """Samples of one spectral quantity on an increasing k grid.

    ``kind`` is one of ``R_pw``, ``T_pw``, ``r_t`` (complex timed amplitude),
    ``R_coh`` or ``R_meas``. Real kinds are checked against ``[0, 1]``.
    """

    k_values: np.ndarray
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        k = np.asarray(self.k_values, dtype=float)
        v = np.asarray(self.values, dtype=float if self.kind in _REAL_KINDS else complex)
        if k.ndim != 1 or k.shape != v.shape:
            raise ValueError("k_values and values must be 1-D arrays of equal length")
        if k.size > 1 and np.any(np.diff(k) <= 0):
            raise ValueError("k_values must be strictly increasing")
        if self.kind in _REAL_KINDS:
            lo, hi = float(np.min(v, initial=0.0)), float(np.max(v, initial=0.0))
            if lo < -BOUND_TOL or hi > 1 + BOUND_TOL:
                raise InvariantViolation(
                    "reflectivity_bound", f"{self.kind} spans [{lo:.3g}, {hi:.3g}]")
        object.__setattr__(self, "k_values", k)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self):
        return self.k_values.size

    @property
    def is_complex(self) -> bool:
        return self.kind not in _REAL_KINDS

    def columns(self):
        if self.is_complex:
            v = self.values
            return ["k", "re", "im", "abs"], np.column_stack([self.k_values, v.real, v.imag, np.abs(v)])
        return ["k", "value"], np.column_stack([self.k_values, self.values])

    def write_csv(self, fh) -> None:
        header = " ".join([f"kind={self.kind}"] + [f"{k}={_fmt(v)}" for k, v in self.meta.items()])
        fh.write(f"# {header}\n")
        names, rows = self.columns()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([f"{v:.17g}" for v in row])

    def to_dict(self) -> dict:
        names, rows = self.columns()
        return {"kind": self.kind, "meta": self.meta,
                "columns": {n: rows[:, i].tolist() for i, n in enumerate(names)}}

    def write_json(self, fh) -> None:
        json.dump(self.to_dict(), fh, indent=1)
        fh.write("\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v).replace(" ", "")


@dataclass(frozen=True)
class ResolutionModel:
    """Instrumental spread ``dk_inst``; zero means a perfect instrument."""

    dk_inst: float = 0.0

    def __post_init__(self):
        v = float(self.dk_inst)
        if not (math.isfinite(v) and v >= 0):
            raise ValueError("dk_inst must be finite and >= 0")
        object.__setattr__(self, "dk_inst", v)


def plane_wave_spectra(profile: BarrierProfile, k_values):
    """``(R_pw, T_pw)`` spectra; ``T_pw`` is the flux transmittance ``(b/f)|t|**2``.

    Where the backing is evanescent ``T_pw`` is zero and ``R_pw`` is one.
    """
    k = np.asarray(k_values, dtype=float)
    sol = plane_wave_amplitudes(profile, k)
    T = np.where(sol.propagating, np.real(sol.b) / sol.f * sol.T, 0.0)
    meta = {"q_fronting": profile.q_fronting, "q_backing": profile.q_backing}
    return (Spectrum(k, np.clip(sol.R, 0.0, None), "R_pw", meta),
            Spectrum(k, np.clip(T, 0.0, None), "T_pw", meta))


def default_window(profile: BarrierProfile, spec: PacketSpec, t: float):
    """``[x0 - 8 sigma(t) - 2 kbar T, L + 2 kbar T + 8 sigma(t)]``."""
    T = float(t) - spec.t0
    s = float(sigma_t(t, spec))
    return (spec.x0 - 8 * s - 2 * spec.kbar * T, profile.length + 2 * spec.kbar * T + 8 * s)


def x_grid(spec: PacketSpec, lo: float, hi: float, k_max: Optional[float] = None,
           nodes_per_wavelength: int = 16) -> np.ndarray:
    """Uniform odd-count grid with at least ``nodes_per_wavelength`` nodes per
    ``min(2 pi/k_max, 2 pi/(kbar + 6 dk))``."""
    kk = spec.kbar + 6 * spec.dk
    if k_max is not None:
        kk = max(kk, k_max)
    h = 2 * np.pi / kk / nodes_per_wavelength
    n = odd(int(np.ceil((hi - lo) / h)) + 1)
    return np.linspace(lo, hi, n)


def kgrid_for_window(spec: PacketSpec, width: float, half_width_in_sigmas: float = 6.0) -> KGrid:
    """Simpson k grid whose quadrature images stay outside an x window of ``width``.

    Simpson's alternating weights make the discrete k sum periodic in x with
    period ``pi/h_k``; a 1.5x margin keeps the images clear.
    """
    span = 2 * half_width_in_sigmas * spec.dk
    return kgrid(spec, max(2049, int(1.5 * span * width / np.pi)), half_width_in_sigmas)


def _projection(profile, spec, k, t, sign, x_window, kg, tail_tol):
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k <= 0):
        raise OutOfRange("projection wave vector must be positive")
    if t < 0:
        raise OutOfRange("t must be non-negative")
    need = default_window(profile, spec, t)
    lo, hi = need if x_window is None else map(float, x_window)
    if lo > need[0] + 1e-9 or hi < need[1] - 1e-9:
        raise WindowTooSmall(f"window [{lo:g}, {hi:g}] does not cover [{need[0]:g}, {need[1]:g}]")
    x = x_grid(spec, lo, hi, k_max=float(k.max()))
    n = x.size
    if kg is None:
        kg = kgrid_for_window(spec, hi - lo)
    psi = assemble_packet(profile, spec, kg, x, t).values
    dens = np.abs(psi) ** 2
    edge = max(2, n // 50)
    total = dens.sum()
    if total > 0 and (dens[:edge].sum() + dens[-edge:].sum()) > tail_tol * total:
        raise WindowTooSmall("packet density reaches the window edges")
    wpsi = simpson_weights(n, x[1] - x[0]) * psi
    out = np.empty(k.size, dtype=complex)
    chunk = max(1, 2_000_000 // n)
    for s in range(0, k.size, chunk):
        out[s:s + chunk] = np.exp(sign * 1j * np.outer(k[s:s + chunk], x)) @ wpsi
    return out


def reflection_amplitude_timed(profile: BarrierProfile, spec: PacketSpec, k, t: float,
                               x_window=None, kg: Optional[KGrid] = None, tail_tol: float = 1e-3):
    """``r(k, t) = int exp(ikx) Psi(x, t) dx`` by Simpson quadrature over the window.

    The window defaults to :func:`default_window` and may only be widened.
    Without an explicit ``kg`` the k grid is made fine enough that its
    quadrature images lie outside the window.
    """
    return _projection(profile, spec, k, t, +1, x_window, kg, tail_tol)


def transmission_amplitude_timed(profile: BarrierProfile, spec: PacketSpec, k, t: float,
                                 x_window=None, kg: Optional[KGrid] = None, tail_tol: float = 1e-3):
    """``int exp(-ikx) Psi(x, t) dx``; at late times only the transmitted part contributes."""
    return _projection(profile, spec, k, t, -1, x_window, kg, tail_tol)


def _incident_k(kappa, q_medium):
    # outgoing wave vector kappa in a medium of density q belongs to k = sqrt(kappa^2 + q)
    return np.sqrt(np.asarray(kappa, dtype=float) ** 2 + q_medium)


def reflection_amplitude_asymptotic(spec: PacketSpec, profile: BarrierProfile, k):
    """Late-time limit of :func:`reflection_amplitude_timed`, ``2 pi exp(-ikx0) p(k) r(k)``.

    For a non-vacuum fronting the reflected wave at incident ``k'`` travels
    with ``kappa = f k'``; ``k`` is read as ``kappa`` and a Jacobian
    ``kappa/k'`` appears. For vacuum fronting both reduce to the form above.
    The dynamical phase ``exp(-i k**2 (t - t0))`` of the timed amplitude is
    not included, so compare moduli or remove that phase first.
    """
    kappa = np.asarray(k, dtype=float)
    kin = _incident_k(kappa, profile.q_fronting)
    sol = plane_wave_amplitudes(profile, kin)
    return 2 * np.pi * np.exp(-1j * kin * spec.x0) * gaussian_weight(kin, spec) * sol.r * kappa / kin


def transmission_amplitude_asymptotic(spec: PacketSpec, profile: BarrierProfile, k):
    """Late-time transmitted amplitude ``2 pi exp(-ikx0) p(k) t(k)``.

    Obtained by analogy with the reflected case and checked against
    :func:`transmission_amplitude_timed`. ``k`` is the outgoing wave vector
    ``kappa = b k'`` in the backing; the Jacobian ``kappa/k'`` is one for a
    vacuum backing. Raises for an evanescent backing at any ``k``.
    """
    kappa = np.asarray(k, dtype=float)
    if np.any(kappa <= 0):
        raise OutOfRange("transmitted wave vector must be positive")
    kin = _incident_k(kappa, profile.q_backing)
    sol = plane_wave_amplitudes(profile, kin)
    return 2 * np.pi * np.exp(-1j * kin * spec.x0) * gaussian_weight(kin, spec) * sol.t * kappa / kin


def gamma_norm(dk: float) -> float:
    """``gamma = dk / (4 pi**1.5)``, so that ``4 pi**2 gamma P(kbar) = 1``."""
    if not dk > 0:
        raise ValueError("dk must be positive")
    return dk / (4 * math.pi**1.5)


def reflectivity_coherent(profile: BarrierProfile, spec: PacketSpec, k_values) -> Spectrum:
    """``R_coh(k) = 4 pi**2 gamma P(k) R_pw(k)``, bounded by ``R_pw``."""
    k = np.asarray(k_values, dtype=float)
    g = gamma_norm(spec.dk)
    R = plane_wave_amplitudes(profile, k).R
    vals = 4 * math.pi**2 * g * normalized_pdf(k, spec) * R
    return Spectrum(k, vals, "R_coh", {"kbar": spec.kbar, "dk": spec.dk, "gamma": g})


def instrument_kernel(eps_offset, model: ResolutionModel):
    """Unnormalised Gaussian ``exp(-eps**2/dk_inst**2)``."""
    if model.dk_inst == 0:
        raise ZeroWidth("dk_inst = 0 is the delta kernel; resample instead")
    e = np.asarray(eps_offset, dtype=float)
    return np.exp(-(e / model.dk_inst) ** 2)


def resolution_convolve(rcoh: Spectrum, model: ResolutionModel, km_values=None,
                        min_samples_per_width: int = 10) -> Spectrum:
    """``R_meas(km) = int P_inst(km - k) R_coh(k) dk`` by trapezoid on the input grid.

    The kernel is the unnormalised :func:`instrument_kernel`, so a constant
    spectrum ``c`` maps to ``c sqrt(pi) dk_inst``. ``km_values`` defaults to
    the input grid and may not extend beyond it.
    """
    k = rcoh.k_values
    km = k if km_values is None else np.asarray(km_values, dtype=float)
    if km.size and (km.min() < k[0] - 1e-12 or km.max() > k[-1] + 1e-12):
        raise OutOfRange("km_values extend beyond the sampled spectrum")
    vals = np.real(rcoh.values)
    meta = dict(rcoh.meta, dk_inst=model.dk_inst)
    if model.dk_inst == 0:
        return Spectrum(km, np.interp(km, k, vals), "R_meas", meta)
    if k.size < 2 or np.max(np.diff(k)) > model.dk_inst / min_samples_per_width:
        raise GridTooCoarse(
            f"need at least {min_samples_per_width} samples per dk_inst={model.dk_inst:g}")
    pos = k > 0
    kk, vv = k[pos], vals[pos]
    w = np.zeros_like(kk)
    d = np.diff(kk)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    out = np.empty(km.size)
    for s in range(0, km.size, 512):
        K = instrument_kernel(km[s:s + 512, None] - kk[None, :], model)
        out[s:s + 512] = K @ (w * vv)
    return Spectrum(km, out, "R_meas", meta)


def reflectivity_zeros(profile: BarrierProfile, k_lo: float, k_hi: float,
                       n_scan: int = 4000, threshold: float = 1e-10):
    """Wave vectors in ``[k_lo, k_hi]`` where ``R_pw`` vanishes.

    Local minima of a scan are refined with a bounded scalar minimiser and
    kept when the refined ``R_pw`` is below ``threshold``.
    """
    k = np.linspace(k_lo, k_hi, n_scan)
    R = plane_wave_amplitudes(profile, k).R
    idx = np.flatnonzero((R[1:-1] <= R[:-2]) & (R[1:-1] <= R[2:])) + 1
    found = []
    for i in idx:
        a, b = k[i - 1], k[i + 1]
        res = optimize.minimize_scalar(lambda z: float(np.abs(plane_wave_amplitudes(profile, z).r)),
                                       bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-13})
        if res.fun ** 2 < threshold:
            found.append(float(res.x))
    return np.array(found)
