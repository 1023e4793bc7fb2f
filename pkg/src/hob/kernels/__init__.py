"""Hot-path kernels with a compiled core and a pure-numpy fallback.

The compiled extension (`hob.kernels._zie_core`, built from Cython) is used
when importable; otherwise the numpy implementation in `fallback.py` takes
over. Setting the environment variable ``HOB_PURE_PYTHON=1`` forces the
fallback, which is useful for benchmarking and for debugging suspected
kernel issues.

`implementation` is either ``"compiled"`` or ``"python"``.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback as _fallback

if os.environ.get("HOB_PURE_PYTHON", "").strip() in ("", "0"):
    try:
        from . import _zie_core as _impl

        implementation = "compiled"
    except ImportError:
        _impl = _fallback
        implementation = "python"
else:
    _impl = _fallback
    implementation = "python"

__all__ = ["zie_cdf", "zie_surplus", "golden_bids", "implementation"]


def _as_batch(*arrays):
    """Broadcast inputs to a common shape and return flat float64 copies."""
    broad = np.broadcast_arrays(*[np.asarray(a, dtype=np.float64) for a in arrays])
    shape = broad[0].shape
    return shape, [np.ascontiguousarray(a.ravel()) for a in broad]


def zie_cdf(pi, lam, x) -> np.ndarray:
    """Win probability 1 - (1-pi)*exp(-lam*x), elementwise with broadcasting."""
    shape, (p, l, xx) = _as_batch(pi, lam, x)
    return _impl.zie_cdf(p, l, xx).reshape(shape)


def zie_surplus(pi, lam, value, x) -> np.ndarray:
    """Expected surplus (value - x) * F(x), elementwise with broadcasting."""
    shape, (p, l, v, xx) = _as_batch(pi, lam, value, x)
    return _impl.zie_surplus(p, l, v, xx).reshape(shape)


def golden_bids(pi, lam, value, n_iter: int = 40) -> np.ndarray:
    """Surplus-maximizing bids on [0, value] via golden-section search."""
    if n_iter < 1:
        raise ValueError(f"n_iter must be >= 1, got {n_iter}")
    shape, (p, l, v) = _as_batch(pi, lam, value)
    return _impl.golden_bids(p, l, v, int(n_iter)).reshape(shape)
