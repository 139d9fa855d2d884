"""Quadrature weights shared by the k-space and x-space integrations."""
from __future__ import annotations

import numpy as np


def odd(n: int) -> int:
    n = int(n)
    return n if n % 2 else n + 1


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n`` (odd) equally spaced nodes."""
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson's rule needs an odd node count >= 3")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def trapezoid_weights(x) -> np.ndarray:
    """Trapezoid weights for arbitrary increasing nodes."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return np.zeros_like(x)
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def uniform_weights(x) -> np.ndarray:
    """Simpson weights if ``x`` is uniform with an odd count, else trapezoid."""
    x = np.asarray(x, dtype=float)
    if x.size >= 3 and x.size % 2 == 1:
        dx = np.diff(x)
        if np.allclose(dx, dx[0], rtol=1e-9, atol=0):
            return simpson_weights(x.size, dx[0])
    return trapezoid_weights(x)
