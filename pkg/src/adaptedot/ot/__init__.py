"""Exact discrete optimal transport.

The transportation simplex lives in a compiled extension (``_transport``)
with a pure-Python twin used when the extension is not built or when
``ADAPTEDOT_PURE=1`` is set. Both pivot identically.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _transport_py

try:
    if os.environ.get("ADAPTEDOT_PURE") == "1":
        raise ImportError("pure backend requested")
    from . import _transport as _compiled
except ImportError:
    _compiled = None

__all__ = [
    "BACKEND",
    "DiscreteMeasure",
    "TransportPlan",
    "solve_ot",
    "wasserstein_p",
    "set_backend",
]

BACKEND = "compiled" if _compiled is not None else "python"
_kernel = (_compiled or _transport_py).transport_simplex

MASS_TOL = 1e-12


def set_backend(name):
    """Switch between ``"compiled"`` and ``"python"`` at runtime."""
    global BACKEND, _kernel
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled transport kernel is not available")
        _kernel = _compiled.transport_simplex
    elif name == "python":
        _kernel = _transport_py.transport_simplex
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability weights (support is implicit)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(math.fsum(w) - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, expected 1")
        object.__setattr__(self, "weights", w)

    @property
    def size(self):
        return self.weights.size


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling matrix together with its objective value."""

    matrix: np.ndarray
    cost: float

    @property
    def support(self):
        """Index pairs carrying positive mass, row-major."""
        return [tuple(ix) for ix in np.argwhere(self.matrix > 0)]


def _as_weights(w):
    return w.weights if isinstance(w, DiscreteMeasure) else np.asarray(w, dtype=float)


def solve_ot(mu, nu, cost):
    """Exact optimal transport between two finite measures.

    Parameters
    ----------
    mu, nu : DiscreteMeasure or array-like
        Source and target weights, sizes ``n`` and ``m``.
    cost : array-like, shape (n, m)
        Arbitrary finite cost matrix.

    Returns
    -------
    TransportPlan
        A vertex optimizer; at most ``n + m - 1`` positive entries.
    """
    a = _as_weights(mu)
    b = _as_weights(nu)
    C = np.asarray(cost, dtype=float)
    if C.shape != (a.size, b.size):
        raise ValueError(f"cost has shape {C.shape}, expected {(a.size, b.size)}")
    if np.any(np.isnan(C)):
        raise ValueError("cost matrix contains NaN")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")

    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    sub, _ = _kernel(a[rows], b[cols], C[np.ix_(rows, cols)])
    plan = np.zeros((a.size, b.size))
    plan[np.ix_(rows, cols)] = sub
    nz = sub > 0
    value = math.fsum((sub[nz] * C[np.ix_(rows, cols)][nz]).tolist())
    return TransportPlan(plan, value)


def _euclidean(x, y):
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


def wasserstein_p(a_points, a_weights, b_points, b_weights, p, dist=None):
    """``W_p`` between two weighted point clouds.

    ``dist`` is a callback ``dist(x, y) -> float`` on support points
    (Euclidean by default).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    dist = dist or _euclidean
    C = np.array([[dist(x, y) ** p for y in b_points] for x in a_points], dtype=float)
    plan = solve_ot(a_weights, b_weights, C)
    return max(plan.cost, 0.0) ** (1.0 / p)
