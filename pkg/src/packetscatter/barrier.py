"""Piecewise-constant barrier profiles.

Units: the Schrodinger equation is used in the reduced form
``-psi'' + q(x) psi = i d(psi)/dt`` with hbar/2m set to one, so lengths are
arbitrary and times are measured in length**2. A laboratory time is recovered
by dividing by hbar/2m (about 3.15e4 um**2/s for neutrons). ``q`` is the
scattering length density already multiplied by 4*pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySamples, NonFiniteDensity, NonPositiveWidth, ZeroWaveVector

__all__ = [
    "BarrierProfile",
    "validate",
    "refractive_index",
    "discretize",
]


@dataclass(frozen=True)
class BarrierProfile:
    """Ordered constant-density bins between a fronting and a backing medium.

    Parameters
    ----------
    bins : sequence of (q, width)
        Bins listed from x=0 towards x=L.
    q_fronting, q_backing : float
        Densities of the semi-infinite media at x<0 and x>L.
    """

    bins: tuple = ()
    q_fronting: float = 0.0
    q_backing: float = 0.0
    _q: np.ndarray = field(init=False, repr=False, compare=False)
    _w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bins = tuple((float(np.real(q)) if np.isreal(q) else complex(q), float(w))
                     for q, w in self.bins)
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "q_fronting", float(self.q_fronting))
        object.__setattr__(self, "q_backing", float(self.q_backing))
        validate(self)
        object.__setattr__(self, "_q", np.array([b[0] for b in bins], dtype=float))
        object.__setattr__(self, "_w", np.array([b[1] for b in bins], dtype=float))

    @property
    def q(self) -> np.ndarray:
        return self._q

    @property
    def widths(self) -> np.ndarray:
        return self._w

    @property
    def edges(self) -> np.ndarray:
        """Bin edges ``[0, x_1, ..., x_J = L]``."""
        return np.concatenate(([0.0], np.cumsum(self._w)))

    @property
    def length(self) -> float:
        return float(self._w.sum()) if len(self.bins) else 0.0

    def __len__(self):
        return len(self.bins)

    def q_at(self, x) -> np.ndarray:
        """Density at positions ``x``; bins are closed on the left."""
        x = np.asarray(x, dtype=float)
        edges = self.edges
        out = np.where(x < 0, self.q_fronting, self.q_backing).astype(float)
        if len(self.bins):
            inside = (x >= 0) & (x < edges[-1])
            j = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(self.bins) - 1)
            out = np.where(inside, self._q[j], out)
        return out

    def to_dict(self) -> dict:
        return {
            "bins": [[q, w] for q, w in self.bins],
            "q_fronting": self.q_fronting,
            "q_backing": self.q_backing,
        }


def validate(profile: BarrierProfile) -> BarrierProfile:
    """Return ``profile`` unchanged, or raise naming the first bad bin."""
    for j, (q, w) in enumerate(profile.bins):
        if isinstance(q, complex) or not math.isfinite(q):
            raise NonFiniteDensity(j, q)
        if not (math.isfinite(w) and w > 0):
            raise NonPositiveWidth(j, w)
    for name in ("q_fronting", "q_backing"):
        v = getattr(profile, name)
        if not math.isfinite(v):
            raise NonFiniteDensity(name, v)
    return profile


def refractive_index(q, k):
    """Index of refraction ``sqrt(1 - q/k**2)``.

    Below the critical wave vector the root with positive imaginary part is
    returned, so ``exp(i n k x)`` decays into the medium.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ZeroWaveVector("wave vector must be positive")
    arg = 1.0 - np.asarray(q, dtype=float) / k**2
    n = np.sqrt(arg.astype(complex))
    # sqrt of (-a + 0j) is +i*sqrt(a); guard against a signed zero flipping it
    n = np.where(arg < 0, 1j * np.sqrt(np.abs(arg)), n)
    return n[()] if n.ndim == 0 else n


def discretize(samples: Iterable[Sequence[float]], n_bins: int,
               q_fronting: float = 0.0, q_backing: float = 0.0) -> BarrierProfile:
    """Average a sampled profile ``q(x)`` onto ``n_bins`` equal-width bins.

    The samples are joined by straight lines (a repeated ``x`` encodes a jump)
    and each bin receives the exact mean of that interpolant. The profile is
    shifted so the first sample sits at x=0.
    """
    pts = np.asarray(list(samples), dtype=float)
    if pts.size == 0:
        raise EmptySamples("no samples given")
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise EmptySamples("samples must be (x, q) pairs")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    order = np.argsort(pts[:, 0], kind="stable")
    x, q = pts[order, 0], pts[order, 1]
    x = x - x[0]
    span = x[-1]
    if not span > 0:
        raise EmptySamples("samples must cover an interval of positive length")

    width = span / n_bins
    lo = np.arange(n_bins) * width
    hi = lo + width
    hi[-1] = span

    # integrate each linear segment clipped to each bin
    xa, xb, qa, qb = x[:-1], x[1:], q[:-1], q[1:]
    seg = xb > xa
    xa, xb, qa, qb = xa[seg], xb[seg], qa[seg], qb[seg]
    a = np.maximum(xa[:, None], lo[None, :])
    b = np.minimum(xb[:, None], hi[None, :])
    overlap = b > a
    # interpolate by fraction along the segment; a slope can overflow on tiny segments
    seg_len = (xb - xa)[:, None]
    dq = (qb - qa)[:, None]
    # non-overlapping pairs may overflow to +-inf here; the clip and mask discard them
    with np.errstate(over="ignore"):
        qa_clip = qa[:, None] + dq * np.clip((a - xa[:, None]) / seg_len, 0, 1)
        qb_clip = qa[:, None] + dq * np.clip((b - xa[:, None]) / seg_len, 0, 1)
    area = np.where(overlap, 0.5 * (qa_clip + qb_clip) * (b - a), 0.0).sum(axis=0)
    means = area / (hi - lo)
    return BarrierProfile(tuple(zip(means.tolist(), (hi - lo).tolist())),
                          q_fronting=q_fronting, q_backing=q_backing)
