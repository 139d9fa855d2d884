"""Gaussian wave packets built from exact stationary states.

The packet is the k-superposition

    Psi(x, t) = sum_i w_i p(k_i) exp(-i k_i x0) psi(x | k_i) exp(-i k_i**2 t)

with ``psi(x | k)`` the stationary state of unit incident amplitude. No
``1/sqrt(2 pi)`` prefactor is applied, so for an empty barrier this equals
``sqrt(2 pi) * free_packet_closed``. Keeping the bare sum means the
late-time projection onto ``exp(-ikx)`` is ``2 pi exp(-ikx0) p(k) r(k)``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .barrier import BarrierProfile
from .errors import DomainTooSmall, GridTooCoarse, OutOfRange
from .quadrature import odd, simpson_weights, trapezoid_weights
from .transfer import partial_matrix, plane_wave_amplitudes

__all__ = [
    "PacketSpec",
    "KGrid",
    "WaveField",
    "gaussian_weight",
    "normalized_pdf",
    "kgrid",
    "sigma_t",
    "free_packet_closed",
    "free_packet_phase",
    "assemble_packet",
    "functional_split",
    "propagate_free_kernel",
    "delta_alpha",
    "delta_closed",
    "delta_quadrature",
    "K_FLOOR",
]

K_FLOOR = 1e-4
# complex entries per (k, x) block while summing over k
_BLOCK = 2_000_000


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian packet class member.

    Parameters
    ----------
    kbar : float
        Mean wave vector, > 0.
    dk : float
        Spread in k, > 0. The initial spatial width is ``sigma0 = 1/dk``.
    x0 : float
        Centre of the incident packet at ``t = t0``.
    t0 : float
        Time at which the packet is centred at ``x0``.
    """

    kbar: float
    dk: float
    x0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        for name in ("kbar", "dk", "x0", "t0"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.kbar <= 0:
            raise ValueError("kbar must be positive")
        if self.dk <= 0:
            raise ValueError("dk must be positive")
        if self.kbar < 3 * self.dk:
            warnings.warn(
                f"kbar={self.kbar} < 3*dk={3 * self.dk}: the k>0 truncation removes "
                "a visible part of the Gaussian", RuntimeWarning, stacklevel=3)

    @property
    def sigma0(self) -> float:
        return 1.0 / self.dk


@dataclass(frozen=True)
class KGrid:
    """Quadrature nodes and weights in k."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if n.ndim != 1 or n.shape != w.shape or n.size == 0:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if np.any(n <= 0) or np.any(np.diff(n) <= 0):
            raise ValueError("k nodes must be positive and strictly increasing")
        if np.any(w <= 0):
            raise ValueError("k weights must be positive")
        object.__setattr__(self, "nodes", n)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True)
class WaveField:
    """Complex samples ``Psi(x, t)`` on an increasing x grid."""

    x_nodes: np.ndarray
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x_nodes, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if x.ndim != 1 or x.shape != v.shape:
            raise ValueError("x_nodes and values must be 1-D arrays of equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("x_nodes must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "x_nodes", x)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", float(self.time))

    def norm(self) -> float:
        """``int |Psi|^2 dx`` by the trapezoid rule."""
        return float(trapezoid_weights(self.x_nodes) @ np.abs(self.values) ** 2)

    def norm_between(self, lo=-np.inf, hi=np.inf) -> float:
        m = (self.x_nodes >= lo) & (self.x_nodes <= hi)
        if m.sum() < 2:
            return 0.0
        return float(trapezoid_weights(self.x_nodes[m]) @ np.abs(self.values[m]) ** 2)

    def __add__(self, other: "WaveField") -> "WaveField":
        if not np.array_equal(self.x_nodes, other.x_nodes):
            raise ValueError("fields live on different grids")
        return WaveField(self.x_nodes, self.values + other.values, self.time)

    def rows(self):
        v = self.values
        return np.column_stack([self.x_nodes, v.real, v.imag, np.abs(v)])

    def write_csv(self, fh) -> None:
        """Write columns ``x, re, im, abs`` to an open text stream."""
        fh.write(f"# time={self.time!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "re", "im", "abs"])
        for row in self.rows():
            w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def read_csv(cls, fh) -> "WaveField":
        time = 0.0
        lines = []
        for line in fh:
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, val = item.partition("=")
                    if key == "time":
                        time = float(val)
                continue
            lines.append(line)
        reader = csv.DictReader(lines)
        x, re, im = [], [], []
        for row in reader:
            x.append(float(row["x"]))
            re.append(float(row["re"]))
            im.append(float(row["im"]))
        return cls(np.array(x), np.array(re) + 1j * np.array(im), time)


def gaussian_weight(k, spec: PacketSpec) -> np.ndarray:
    """Unnormalised weight ``exp(-(k-kbar)**2/(2 dk**2))``, zero for ``k <= 0``."""
    k = np.asarray(k, dtype=float)
    p = np.exp(-((k - spec.kbar) ** 2) / (2 * spec.dk**2))
    return np.where(k > 0, p, 0.0)


def normalized_pdf(k, spec: PacketSpec) -> np.ndarray:
    """``P(k) = exp(-(k-kbar)**2/dk**2)/(sqrt(pi) dk)``; unit mass on the real line."""
    k = np.asarray(k, dtype=float)
    return np.exp(-((k - spec.kbar) ** 2) / spec.dk**2) / (math.sqrt(math.pi) * spec.dk)


def kgrid(spec: PacketSpec, n_nodes: int = 2049, half_width_in_sigmas: float = 6.0,
          k_floor: Optional[float] = K_FLOOR) -> KGrid:
    """Uniform composite-Simpson grid on ``[max(kbar - h dk, k_floor), kbar + h dk]``.

    ``k_floor=None`` disables the positivity clip (only meaningful when the
    lower edge is already positive).
    """
    if n_nodes < 16:
        raise ValueError("n_nodes must be >= 16")
    n = odd(n_nodes)
    lo = spec.kbar - half_width_in_sigmas * spec.dk
    if k_floor is not None:
        lo = max(lo, k_floor)
    hi = spec.kbar + half_width_in_sigmas * spec.dk
    nodes = np.linspace(lo, hi, n)
    return KGrid(nodes, simpson_weights(n, (hi - lo) / (n - 1)))


def sigma_t(t, spec: PacketSpec):
    """Amplitude width ``sqrt(sigma0**2 + 4 T**2/sigma0**2)`` with ``T = t - t0``."""
    T = np.asarray(t, dtype=float) - spec.t0
    s0 = spec.sigma0
    return np.sqrt(s0**2 + 4 * T**2 / s0**2)


def _free_parts(x, t, spec: PacketSpec):
    X = np.asarray(x, dtype=float) - spec.x0
    T = np.asarray(t, dtype=float) - spec.t0
    a = 0.5 / spec.dk**2
    s = a + 1j * T
    return X, T, a, s


def _free_exponent(x, t, spec: PacketSpec):
    # log of (1/sqrt(2 pi)) int p(k) exp(ikX - ik^2 T) dk over the real line
    X, T, a, s = _free_parts(x, t, spec)
    return (2 * a * spec.kbar + 1j * X) ** 2 / (4 * s) - a * spec.kbar**2 - 0.5 * np.log(2 * s)


def free_packet_closed(x, t, spec: PacketSpec, k_min: Optional[float] = None):
    """Free Gaussian packet in closed form.

    ``Psi = (2 s)**-0.5 exp((2 a kbar + i X)**2 / (4 s) - a kbar**2)`` with
    ``a = 1/(2 dk**2)``, ``s = a + i T``. Its modulus is
    ``c(t) exp(-(X - 2 kbar T)**2 / (2 sigma(t)**2))`` and ``Psi(x0, t0) = dk``.

    Parameters
    ----------
    k_min : float, optional
        Lower limit of the k integral. ``None`` integrates over the whole
        line; a finite value gives the packet built from ``k > k_min`` only,
        which is what a clipped :func:`kgrid` superposition converges to.
    """
    E = _free_exponent(x, t, spec)
    if k_min is None:
        return np.exp(E)
    X, T, a, s = _free_parts(x, t, spec)
    m = (2 * a * spec.kbar + 1j * X) / (2 * s)
    z = np.sqrt(s) * (k_min - m)
    # Psi_full * erfc(z)/2 written with erfcx so neither factor overflows
    tail = 0.5 * np.exp(E - z * z)
    pos = np.real(z) >= 0
    zz = np.where(pos, z, -z)
    g = tail * special.erfcx(zz)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(pos, g, np.exp(E) - g)


def free_packet_phase(x, t, spec: PacketSpec):
    """Phase ``chi`` in ``Psi = |Psi| exp(-i chi)``, continuous in x and t."""
    return -np.imag(_free_exponent(x, t, spec))


def _coefficients(spec, kg, t, weight):
    k = kg.nodes
    p = gaussian_weight(k, spec) if weight is None else np.asarray(weight(k), dtype=complex)
    T = float(t) - spec.t0
    return kg.weights * p * np.exp(-1j * k * spec.x0 - 1j * k * k * T)


def _region_parts(profile, spec, kg, x_nodes, t, weight):
    x = np.asarray(x_nodes, dtype=float)
    k = kg.nodes
    c = _coefficients(spec, kg, t, weight)
    sol = plane_wave_amplitudes(profile, k)
    L = profile.length
    parts = {name: np.zeros(x.size, dtype=complex) for name in ("inc", "refl", "bar", "trans")}
    chunk = max(1, _BLOCK // max(k.size, 1))

    left = np.flatnonzero(x < 0)
    cr = c * sol.r
    fk = sol.f * k
    for s in range(0, left.size, chunk):
        idx = left[s:s + chunk]
        E = np.exp(1j * np.outer(fk, x[idx]))
        parts["inc"][idx] = c @ E
        parts["refl"][idx] = cr @ E.conj()

    right = np.flatnonzero(x > L)
    ct = c * sol.t
    bk = sol.b * k
    for s in range(0, right.size, chunk):
        idx = right[s:s + chunk]
        parts["trans"][idx] = ct @ np.exp(1j * np.outer(bk, x[idx]))

    mid = np.flatnonzero((x >= 0) & (x <= L))
    if mid.size:
        # chi(0) = (1 + r, i f (1 - r)); the barrier state is the first component of M(x) chi(0)
        u = c * (1 + sol.r)
        v = c * 1j * sol.f * (1 - sol.r)
        for s in range(0, mid.size, chunk):
            idx = mid[s:s + chunk]
            M = partial_matrix(profile, k[:, None], x[idx][None, :])
            parts["bar"][idx] = u @ M.a + v @ M.b_
    return parts


def assemble_packet(profile: BarrierProfile, spec: PacketSpec, kg: KGrid, x_nodes, t: float,
                    weight: Optional[Callable] = None) -> WaveField:
    """Superpose stationary states into ``Psi(x, t)``.

    Parameters
    ----------
    weight : callable, optional
        Replacement for :func:`gaussian_weight`, called as ``weight(k)``.
        Lets a tabulated ``p(k)`` be used instead of the Gaussian.
    """
    if t < 0:
        raise OutOfRange("t must be non-negative")
    parts = _region_parts(profile, spec, kg, x_nodes, t, weight)
    total = parts["inc"] + parts["refl"] + parts["bar"] + parts["trans"]
    return WaveField(np.asarray(x_nodes, dtype=float), total, t)


def functional_split(profile: BarrierProfile, spec: PacketSpec, kg: KGrid, x_nodes, t: float,
                     weight: Optional[Callable] = None):
    """Region-restricted pieces ``(incident, reflected, barrier, transmitted)``.

    Each piece vanishes outside its own region; the four add up to
    :func:`assemble_packet`.
    """
    if t < 0:
        raise OutOfRange("t must be non-negative")
    x = np.asarray(x_nodes, dtype=float)
    parts = _region_parts(profile, spec, kg, x, t, weight)
    return tuple(WaveField(x, parts[n], t) for n in ("inc", "refl", "bar", "trans"))


def propagate_free_kernel(field: WaveField, t2: float, x_out=None,
                          norm_tol: float = 1e-4, check_norm: bool = True) -> WaveField:
    """Propagate a field with the free kernel ``exp(i d**2/(4 dt))/sqrt(4 pi i dt)``.

    The convolution is a trapezoid sum over the input grid. A discrete kernel
    sum reproduces the continuous integral only while the aliased images,
    displaced by ``4 pi dt / h`` for input spacing ``h``, stay outside the
    output window; a grid that violates this raises :class:`GridTooCoarse`.
    When ``check_norm`` is set, a norm loss above ``norm_tol`` (the output
    window does not hold the spread packet) raises :class:`DomainTooSmall`.
    """
    dt = float(t2) - field.time
    y = field.x_nodes
    x = y if x_out is None else np.asarray(x_out, dtype=float)
    if dt == 0:
        if x_out is not None and not np.array_equal(x, y):
            return WaveField(x, np.interp(x, y, field.values.real) + 1j * np.interp(x, y, field.values.imag), t2)
        return WaveField(y.copy(), field.values.copy(), t2)
    if dt < 0:
        raise OutOfRange("t2 must not precede the field time")
    h = float(np.max(np.diff(y)))
    reach = max(x[-1], y[-1]) - min(x[0], y[0])
    if 2 * np.pi * dt / h <= reach:
        raise GridTooCoarse(
            f"input spacing {h:g} aliases the kernel over a reach of {reach:g} at dt={dt:g}")
    wy = trapezoid_weights(y) * field.values
    pref = 1.0 / np.sqrt(4j * np.pi * dt)
    out = np.empty(x.size, dtype=complex)
    chunk = max(1, _BLOCK // max(y.size, 1))
    for s in range(0, x.size, chunk):
        d = x[s:s + chunk, None] - y[None, :]
        out[s:s + chunk] = np.exp(1j * d * d / (4 * dt)) @ wy
    res = WaveField(x, pref * out, t2)
    if check_norm:
        n_in, n_out = field.norm(), res.norm()
        if n_in > 0 and n_out < (1 - norm_tol) * n_in:
            raise DomainTooSmall(f"output window keeps {n_out / n_in:.6f} of the norm")
    return res


def delta_alpha(spec: PacketSpec) -> float:
    """Width parameter of ``|w(k)|**2 = sqrt(2 alpha/pi) exp(-2 alpha (k-kbar)**2)``.

    ``alpha = 1/(2 dk**2)`` makes ``|w|**2`` the normalised class density
    :func:`normalized_pdf`.
    """
    return 0.5 / spec.dk**2


def delta_closed(X, T, spec: PacketSpec):
    """Packet autocorrelation ``Delta(X, T) = int exp(i(kX - k**2 T)) |w(k)|**2 dk``.

    Closed form with ``v = 2 kbar``::

        sqrt(2a/(2a+iT)) exp(-a (X - vT)**2 / (2 (4a**2 + T**2)))
            * exp(i (4 a**2 kbar X + (X**2/4 - 4 a**2 kbar**2) T) / (4 a**2 + T**2))
    """
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    a = delta_alpha(spec)
    kb = spec.kbar
    den = 4 * a * a + T * T
    amp = np.sqrt(2 * a / (2 * a + 1j * T))
    env = np.exp(-a * (X - 2 * kb * T) ** 2 / (2 * den))
    ph = np.exp(1j * (4 * a * a * kb * X + (X * X / 4 - 4 * a * a * kb * kb) * T) / den)
    return amp * env * ph


def delta_quadrature(X, T, spec: PacketSpec, half_width_in_sigmas: float = 9.0,
                     nodes_per_turn: int = 256):
    """Simpson quadrature of the autocorrelation integral, one (X, T) at a time.

    The k range is symmetric about ``kbar`` and not clipped at k=0, since the
    integral runs over the whole real line. The node count follows the largest
    phase rate ``|X| + 2 |k|max |T|`` on the range.
    """
    Xa, Ta = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(T, dtype=float))
    out = np.empty(Xa.shape, dtype=complex)
    hw = half_width_in_sigmas * spec.dk
    lo, hi = spec.kbar - hw, spec.kbar + hw
    kmax = max(abs(lo), abs(hi))
    for i in np.ndindex(Xa.shape):
        x, t = float(Xa[i]), float(Ta[i])
        rate = abs(x) + 2 * kmax * abs(t) + 1.0 / spec.dk
        n = odd(max(1025, int(np.ceil((hi - lo) * rate / (2 * np.pi) * nodes_per_turn))))
        k = np.linspace(lo, hi, n)
        w2 = normalized_pdf(k, spec)
        out[i] = simpson_weights(n, (hi - lo) / (n - 1)) @ (w2 * np.exp(1j * (k * x - k * k * t)))
    return out[()] if out.ndim == 0 else out
