"""Time averaging of a pure-state density matrix in a discrete energy basis.

For ``psi(t) = sum_n c_n exp(-i E_n t) phi_n`` the average of
``|psi><psi|`` over ``[-T/2, T/2]`` scales each off-diagonal element by
``sinc((E_n - E_m) T / 2)`` and tends to ``diag(|c_n|**2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEnergies

__all__ = ["DiscreteState", "density_at", "time_averaged_density", "purity", "sinc"]


def sinc(x):
    """Unnormalised ``sin(x)/x`` with ``sinc(0) = 1``."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


@dataclass(frozen=True)
class DiscreteState:
    """Normalised coefficients over non-degenerate energy levels."""

    coefficients: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).ravel()
        e = np.asarray(self.energies, dtype=float).ravel()
        if c.shape != e.shape or c.size == 0:
            raise ValueError("coefficients and energies must be non-empty and of equal length")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"sum |c_n|^2 = {norm!r}, expected 1")
        if np.unique(e).size != e.size:
            raise DegenerateEnergies("energies must be pairwise distinct")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "energies", e)

    @classmethod
    def normalized(cls, coefficients, energies) -> "DiscreteState":
        c = np.asarray(coefficients, dtype=complex)
        return cls(c / np.linalg.norm(c), energies)

    def gaps(self) -> np.ndarray:
        """``E_n - E_m`` as a matrix indexed ``[n, m]``."""
        return self.energies[:, None] - self.energies[None, :]


def density_at(state: DiscreteState, t: float) -> np.ndarray:
    """``rho_nm(t) = c_n c_m* exp(-i (E_n - E_m) t)``."""
    c = state.coefficients * np.exp(-1j * state.energies * t)
    return np.outer(c, c.conj())


def time_averaged_density(state: DiscreteState, T: float) -> np.ndarray:
    """Average of :func:`density_at` over a window of length ``T`` centred on 0."""
    if not T > 0:
        raise ValueError("T must be positive")
    c = state.coefficients
    return np.outer(c, c.conj()) * sinc(state.gaps() * T / 2)


def purity(rho) -> float:
    """``trace(rho @ rho)``."""
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))
