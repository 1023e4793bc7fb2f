"""Vectorized numpy implementations of the hot bidding kernels.

Semantics reference for the compiled extension: both implementations must
produce the same results up to floating-point rounding, and the test suite
holds them to that. Inputs are 1-D contiguous float64 arrays of equal length
(the package-level wrappers take care of coercion and broadcasting).
"""

from __future__ import annotations

import numpy as np

# Inverse golden ratio 1/phi = 2/(1+sqrt(5)).
_INV_PHI = 2.0 / (1.0 + np.sqrt(5.0))


def zie_cdf(pi: np.ndarray, lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Win probability at bid x under a zero-inflated exponential price."""
    return 1.0 - (1.0 - pi) * np.exp(-lam * x)


def zie_surplus(pi: np.ndarray, lam: np.ndarray, value: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Expected surplus (value - x) * F(x) at bid x."""
    return (value - x) * (1.0 - (1.0 - pi) * np.exp(-lam * x))


def golden_bids(pi: np.ndarray, lam: np.ndarray, value: np.ndarray, n_iter: int) -> np.ndarray:
    """Surplus-maximizing bids on [0, value] by golden-section search.

    An impression bids 0 when it has no interior optimum, i.e. when
    (1 - pi) * (1 + lam * value) <= 1; otherwise the bracket shrinks by
    1/phi per iteration and the midpoint of the final bracket is returned.
    """
    q = 1.0 - pi
    interior = (q * (1.0 + lam * value) > 1.0) & (value > 0.0)

    a = np.zeros_like(value)
    b = value.copy()
    span = b - a
    c = b - span * _INV_PHI
    d = a + span * _INV_PHI
    for _ in range(n_iter):
        g_c = (value - c) * (1.0 - q * np.exp(-lam * c))
        g_d = (value - d) * (1.0 - q * np.exp(-lam * d))
        shift_up = g_c < g_d
        a = np.where(shift_up, c, a)
        b = np.where(shift_up, b, d)
        span = b - a
        c = b - span * _INV_PHI
        d = a + span * _INV_PHI
    bids = 0.5 * (a + b)
    return np.where(interior, bids, 0.0)
