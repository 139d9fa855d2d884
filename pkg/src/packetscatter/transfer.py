"""Transfer matrices and stationary plane-wave solutions.

The phase-space state is ``chi(x) = (psi(x), psi'(x)/k)``; the transfer matrix
``M(x)`` carries ``chi(0)`` to ``chi(x)``. For real densities every matrix is
real and unimodular, including below the critical wave vector, so all matrix
algebra here is done on real arrays broadcast over ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barrier import BarrierProfile, refractive_index
from .errors import EvanescentFronting, OutOfRange, ZeroWaveVector

__all__ = [
    "TransferMatrix",
    "PhaseSpaceState",
    "PlaneWaveSolution",
    "bin_matrix",
    "compose",
    "partial_matrix",
    "plane_wave_amplitudes",
    "reflectivity_via_norm",
    "psi_stationary",
]

# below this |n k w| the trigonometric forms are replaced by their series
CRITICAL_SWITCH = 1e-6


@dataclass(frozen=True)
class TransferMatrix:
    """Real 2x2 matrix ``[[a, b_], [c, d]]``; entries may be arrays over k."""

    a: np.ndarray
    b_: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @classmethod
    def identity(cls, shape=()):
        one, zero = np.ones(shape), np.zeros(shape)
        return cls(one, zero, zero.copy(), one.copy())

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.a * other.a + self.b_ * other.c,
            self.a * other.b_ + self.b_ * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b_ + self.d * other.d,
        )

    @property
    def det(self):
        return self.a * self.d - self.b_ * self.c

    def as_array(self) -> np.ndarray:
        """Stack to shape ``(..., 2, 2)``."""
        a, b, c, d = np.broadcast_arrays(self.a, self.b_, self.c, self.d)
        return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)

    def apply(self, chi: "PhaseSpaceState") -> "PhaseSpaceState":
        return PhaseSpaceState(self.a * chi.psi + self.b_ * chi.dpsi_over_k,
                               self.c * chi.psi + self.d * chi.dpsi_over_k)


@dataclass(frozen=True)
class PhaseSpaceState:
    psi: np.ndarray
    dpsi_over_k: np.ndarray


@dataclass(frozen=True)
class PlaneWaveSolution:
    """Stationary amplitudes at wave vectors ``k``.

    ``alpha``, ``beta``, ``gamma_`` and ``sigma_sum`` are the Gram-matrix
    entries of the flux-scaled transfer matrix; they are NaN where the backing
    is evanescent.
    """

    k: np.ndarray
    r: np.ndarray
    t: np.ndarray
    f: np.ndarray
    b: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma_: np.ndarray
    sigma_sum: np.ndarray
    propagating: np.ndarray
    matrix: TransferMatrix

    @property
    def R(self):
        return np.abs(self.r) ** 2

    @property
    def T(self):
        return np.abs(self.t) ** 2

    def flux_residual(self):
        """``R + (b/f) T - 1``; NaN where the backing does not propagate."""
        ratio = np.real(self.b) / np.real(self.f)
        res = self.R + ratio * self.T - 1.0
        return np.where(self.propagating, res, np.nan)


def _check_k(k):
    k = np.asarray(k, dtype=float)
    if np.any(~(k > 0)):
        raise ZeroWaveVector("wave vector must be positive")
    return k


def bin_matrix(q, width, k) -> TransferMatrix:
    """Transfer matrix of one constant-density bin of thickness ``width``.

    With ``theta = n k w`` this is ``[[cos theta, sin(theta)/n],
    [-n sin theta, cos theta]]``. Only ``theta**2 = (k**2 - q) w**2`` enters,
    which is real, so the sub-critical branch (cosh/sinh) needs no complex
    arithmetic.
    """
    k = _check_k(k)
    q = np.asarray(q, dtype=float)
    w = np.asarray(width, dtype=float)
    if np.any(w < 0):
        raise OutOfRange("bin width must be non-negative")
    theta2 = (k * k - q) * w * w
    s = np.sqrt(np.abs(theta2))
    small = s < CRITICAL_SWITCH
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        cos_t = np.where(theta2 >= 0, np.cos(s), np.cosh(s))
        sinc_t = np.where(theta2 >= 0, np.sin(s), np.sinh(s)) / s
    cos_t = np.where(small, 1.0 - 0.5 * theta2, cos_t)
    sinc_t = np.where(small, 1.0 - theta2 / 6.0, sinc_t)
    b = k * w * sinc_t
    c = (q - k * k) * w / k * sinc_t
    return TransferMatrix(cos_t, b, c, cos_t.copy())


def _prefix_products(profile: BarrierProfile, k):
    """``[I, M_1, M_2 M_1, ..., M_J ... M_1]`` evaluated at ``k``."""
    out = [TransferMatrix.identity(np.shape(k))]
    for q, w in profile.bins:
        out.append(bin_matrix(q, w, k) @ out[-1])
    return out


def compose(profile: BarrierProfile, k) -> TransferMatrix:
    """Full barrier matrix ``M(L) = M_J ... M_1``."""
    k = _check_k(k)
    return _prefix_products(profile, k)[-1]


def partial_matrix(profile: BarrierProfile, k, x) -> TransferMatrix:
    """``M(x)`` for ``0 <= x <= L``; ``k`` and ``x`` broadcast together.

    Completed bins to the left of ``x`` are multiplied in full, the bin that
    contains ``x`` contributes a matrix of the partial width.
    """
    k = _check_k(k)
    x = np.asarray(x, dtype=float)
    L = profile.length
    if np.any((x < 0) | (x > L)):
        raise OutOfRange(f"x must lie in [0, {L}]")
    shape = np.broadcast_shapes(k.shape, x.shape)
    if len(profile) == 0:
        return TransferMatrix.identity(shape)
    kb, xb = (np.broadcast_to(v, shape).ravel() for v in (k, x))
    edges = profile.edges
    j = np.clip(np.searchsorted(edges, xb, side="right") - 1, 0, len(profile) - 1)
    # prefix[m] = M_m ... M_1 evaluated at every point
    pa = np.empty((len(profile), kb.size)); pb = np.empty_like(pa)
    pc = np.empty_like(pa); pd = np.empty_like(pa)
    acc = TransferMatrix.identity(kb.shape)
    for m, (q, w) in enumerate(profile.bins):
        pa[m], pb[m], pc[m], pd[m] = acc.a, acc.b_, acc.c, acc.d
        if m < len(profile) - 1:
            acc = bin_matrix(q, w, kb) @ acc
    cols = np.arange(kb.size)
    before = TransferMatrix(pa[j, cols], pb[j, cols], pc[j, cols], pd[j, cols])
    M = bin_matrix(profile.q[j], xb - edges[j], kb) @ before
    return TransferMatrix(*(np.reshape(v, shape) for v in (M.a, M.b_, M.c, M.d)))


def _indices(profile, k):
    f = refractive_index(profile.q_fronting, k)
    if np.any(np.abs(np.imag(f)) > 0) or np.any(np.real(f) <= 0):
        raise EvanescentFronting("k**2 must exceed the fronting density")
    b = refractive_index(profile.q_backing, k)
    return np.real(f), np.asarray(b, dtype=complex)


def plane_wave_amplitudes(profile: BarrierProfile, k) -> PlaneWaveSolution:
    """Reflection and transmission amplitudes for unit incident amplitude at x=0."""
    k = _check_k(k)
    f, b = _indices(profile, k)
    M = compose(profile, k)
    A, B, C, D = M.a, M.b_, M.c, M.d
    den = f * b * B - C + 1j * (f * D + b * A)
    r = (f * b * B + C + 1j * (f * D - b * A)) / den
    t = 2j * f * np.exp(-1j * b * k * profile.length) / den

    propagating = np.abs(np.imag(b)) == 0
    br = np.where(propagating, np.real(b), np.nan)
    with np.errstate(invalid="ignore"):
        alpha = (br * A * A + C * C / br) / f
        beta = f * (br * B * B + D * D / br)
        gamma_ = br * A * B + C * D / br
    return PlaneWaveSolution(
        k=k, r=r, t=t, f=f, b=b,
        alpha=alpha, beta=beta, gamma_=gamma_, sigma_sum=alpha + beta,
        propagating=propagating, matrix=M,
    )


def reflectivity_via_norm(profile: BarrierProfile, k):
    """``R = (S - 2)/(S + 2)`` with ``S`` the squared Frobenius norm of the
    flux-scaled matrix ``diag(sqrt b, 1/sqrt b) M diag(1/sqrt f, sqrt f)``."""
    k = _check_k(k)
    f, b = _indices(profile, k)
    if np.any(np.imag(b) != 0):
        raise EvanescentFronting("norm route needs a propagating backing")
    b = np.real(b)
    M = compose(profile, k)
    sb, sf = np.sqrt(b), np.sqrt(f)
    S = (sb / sf * M.a) ** 2 + (sb * sf * M.b_) ** 2 + (M.c / (sb * sf)) ** 2 + (sf / sb * M.d) ** 2
    return (S - 2.0) / (S + 2.0)


def psi_stationary(profile: BarrierProfile, k, x, solution: PlaneWaveSolution | None = None):
    """Stationary wave function ``psi(x | k)`` with unit incident amplitude.

    ``k`` and ``x`` broadcast against each other, e.g. ``k[:, None]`` and
    ``x[None, :]`` give a (nk, nx) table. ``solution`` may be passed to reuse
    amplitudes already computed for the same ``k``.
    """
    k = _check_k(k)
    x = np.asarray(x, dtype=float)
    sol = solution if solution is not None else plane_wave_amplitudes(profile, k)
    f, b, r, t = sol.f, sol.b, sol.r, sol.t
    L = profile.length
    shape = np.broadcast_shapes(k.shape, x.shape)
    out = np.zeros(shape, dtype=complex)
    kb, xb = np.broadcast_arrays(k, x)
    fb, bb = np.broadcast_to(f, shape), np.broadcast_to(b, shape)
    rb, tb = np.broadcast_to(r, shape), np.broadcast_to(t, shape)

    left = xb < 0
    if np.any(left):
        kx = fb[left] * kb[left] * xb[left]
        out[left] = np.exp(1j * kx) + rb[left] * np.exp(-1j * kx)
    right = xb > L
    if np.any(right):
        out[right] = tb[right] * np.exp(1j * bb[right] * kb[right] * xb[right])
    mid = ~(left | right)
    if np.any(mid):
        km, xm = kb[mid], xb[mid]
        Mx = partial_matrix(profile, km, xm) if len(profile) else TransferMatrix.identity(km.shape)
        out[mid] = Mx.a * (1 + rb[mid]) + Mx.b_ * 1j * fb[mid] * (1 - rb[mid])
    return out
