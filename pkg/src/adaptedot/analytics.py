"""Optimal stopping, Doob decomposition and related diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .logic import AdaptedFunction, clamp, const, evaluate, proj, rank_separating_pair
from .metric import ground_cost
from .process import FilteredProcess

__all__ = [
    "StoppingCost",
    "SnellResult",
    "DoobDecomposition",
    "StageCost",
    "snell",
    "lifted_cost",
    "coin_gap_cost",
    "rank_separating_cost",
    "doob",
    "doob_process",
    "doob_ground",
    "doob_constants",
    "martingale_deviation",
    "control_value",
    "CONTROL_CAP",
]

CONTROL_CAP = 200_000

CostFn = Union[Callable[[np.ndarray], float], AdaptedFunction]


class StoppingCost:
    """Costs ``c_1..c_N`` for stopping at each time.

    Each ``c_t`` is a callable on the full ``(N, d)`` path or a rank-0
    adapted function. It must only read ``x_1..x_t``; :func:`snell` rejects
    costs that vary within an ``F_t`` cell.
    """

    def __init__(self, costs: Sequence[CostFn], lipschitz: Optional[float] = None):
        if not costs:
            raise ValueError("need at least one cost")
        self.costs = list(costs)
        self.lipschitz = lipschitz

    @property
    def horizon(self):
        return len(self.costs)

    def table(self, proc: FilteredProcess) -> np.ndarray:
        """``(n, N)`` matrix of ``c_t`` per atom."""
        if self.horizon != proc.horizon:
            raise ValueError(f"cost horizon {self.horizon} != process horizon {proc.horizon}")
        cols = []
        for c in self.costs:
            if isinstance(c, AdaptedFunction):
                cols.append(evaluate(c, proc))
            else:
                cols.append(np.array([float(c(proc.paths[k])) for k in range(proc.n_atoms)]))
        return np.stack(cols, axis=1)


@dataclass
class SnellResult:
    value: float
    envelope: np.ndarray
    rule: np.ndarray

    def __iter__(self):
        return iter((self.value, self.envelope, self.rule))


def snell(proc: FilteredProcess, cost: StoppingCost) -> SnellResult:
    """Optimal stopping by backward induction.

    Returns the value ``E[S_1]``, the envelope ``S`` (atoms x times) and
    the earliest optimal stopping time per atom (1-based).
    """
    C = cost.table(proc)
    N = proc.horizon
    for t in range(1, N + 1):
        for cell in proc.cells(t):
            vals = C[cell, t - 1]
            if np.max(vals) - np.min(vals) > 1e-12 * (1.0 + np.max(np.abs(vals))):
                raise ValueError(f"cost c_{t} is not F_{t}-measurable (anticipative)")
    S = np.empty_like(C)
    S[:, N - 1] = C[:, N - 1]
    cont = np.full_like(C, np.inf)
    for t in range(N - 1, 0, -1):
        cont[:, t - 1] = proc.cond_expect(S[:, t], t)
        S[:, t - 1] = np.minimum(C[:, t - 1], cont[:, t - 1])
    stop = C <= cont
    rule = np.argmax(stop, axis=1) + 1
    value = math.fsum((proc.probs * S[:, 0]).tolist())
    return SnellResult(value, S, rule)


def lifted_cost(c: StoppingCost, first: float) -> StoppingCost:
    """Cost after prepending one step: ``c'_1 = first``, ``c'_t(x) = c_{t-1}(x_2..)``."""

    def shift(fn):
        if isinstance(fn, AdaptedFunction):
            from .logic import lift

            return lift(fn)
        return lambda x: fn(x[1:])

    return StoppingCost([const(first)] + [shift(fn) for fn in c.costs], c.lipschitz)


def coin_gap_cost() -> StoppingCost:
    """Two-step cost ``c_1 = 1/2``, ``c_2 = clamp(x_2, 0, 1)``; 1-Lipschitz."""
    return StoppingCost([const(0.5), clamp(proj(2), 0.0, 1.0)], lipschitz=1.0)


def rank_separating_cost(N: int):
    """``(x, y, cost)`` with different stopping values for the rank pair at horizon ``N``."""
    x, y, _ = rank_separating_pair(2)
    c = coin_gap_cost()
    from .process import independent_coin_extension

    for _ in range(N - 2):
        vx, vy = snell(x, c).value, snell(y, c).value
        c = lifted_cost(c, (vx + vy) / 2.0)
        x, y = independent_coin_extension(x, y, False), independent_coin_extension(x, y, True)
    return x, y, c


@dataclass
class DoobDecomposition:
    """``X = M + A`` with ``M`` a martingale and ``A`` predictable, ``A_1 = 0``.

    Both arrays have the shape of ``proc.paths``.
    """

    martingale: np.ndarray
    drift: np.ndarray


def doob(proc: FilteredProcess) -> DoobDecomposition:
    """Predictable decomposition ``A_t - A_{t-1} = E[X_t - X_{t-1} | F_{t-1}]``."""
    X = proc.paths
    A = np.zeros_like(X)
    for t in range(2, proc.horizon + 1):
        step = proc.cond_expect(X[:, t - 1], t - 1) - X[:, t - 2]
        # weighted averages of a martingale can miss zero by a few ulps
        scale = np.max(np.abs(X[:, t - 2 : t]), initial=0.0)
        step[np.abs(step) <= 8 * np.finfo(float).eps * scale] = 0.0
        A[:, t - 1] = A[:, t - 2] + step
    return DoobDecomposition(X - A, A)


def doob_process(proc: FilteredProcess) -> FilteredProcess:
    """Process with values ``(M_t, A_t)`` on the filtration of ``proc``."""
    D = doob(proc)
    return FilteredProcess(proc.probs, np.concatenate([D.martingale, D.drift], axis=2), proc.filtration)


def doob_ground(p: float, d: int):
    """Per-time cost ``|m - m'|^p + |a - a'|^p`` on stacked ``(M, A)`` values."""
    g = ground_cost(p)

    def cost(u, v):
        return g(u[:, :d], v[:, :d]) + g(u[:, d:], v[:, d:])

    return cost


def doob_constants(p: float, N: int):
    """``(lower, upper)`` factors bounding ``AW_p(D^x, D^y) / AW_p(x, y)``."""
    lower = 2.0 ** ((1.0 - p) / p)
    upper = (2.0 ** (p - 1) + (2.0 ** (p - 1) + 1.0) * N**p * 2.0**p) ** (1.0 / p)
    return lower, upper


def martingale_deviation(proc: FilteredProcess) -> float:
    """``max_{t <= s} E|X_t - E[X_s | F_t]|``; zero exactly for martingales."""
    X = proc.paths
    N = proc.horizon
    worst = 0.0
    for s in range(1, N + 1):
        for t in range(1, s):
            gap = X[:, t - 1] - proc.cond_expect(X[:, s - 1], t)
            worst = max(worst, math.fsum((proc.probs * np.linalg.norm(gap, axis=1)).tolist()))
    return worst


class StageCost:
    """Stage-separable objective ``J = sum_s fn(s, path, H_{s+1})``, ``s = 1..N-1``.

    ``fn`` must only read ``x_1..x_{s+1}`` of the path.
    """

    def __init__(self, fn: Callable[[int, np.ndarray, np.ndarray], float]):
        self.fn = fn


def _integral(X: np.ndarray, H: np.ndarray) -> np.ndarray:
    """``(H.X)_t = sum_{s<t} H_{s+1} (X_{s+1} - X_s)`` per atom and time."""
    inc = np.einsum("ntd,ntd->nt", H[:, 1:], np.diff(X, axis=1))
    return np.concatenate([np.zeros((X.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)


def control_value(proc: FilteredProcess, objective, grid, cap: int = CONTROL_CAP) -> float:
    """Minimal ``E[J]`` over predictable strategies with values in ``grid``.

    ``H_{s+1}`` is chosen per ``F_s`` cell, ``s = 1..N-1`` (``H_1`` plays
    no role). A :class:`StageCost` objective is minimized cell by cell;
    any other ``objective(path, hx, H) -> float`` is searched exhaustively
    and raises when the number of strategies exceeds ``cap``.
    """
    G = np.atleast_2d(np.asarray(grid, dtype=float))
    if G.shape[1] != proc.dim:
        G = G.reshape(-1, proc.dim)
    if G.size == 0:
        raise ValueError("grid is empty")
    if np.any(np.abs(G) > 1.0 + 1e-12):
        raise ValueError("grid values must lie in [-1, 1]^d")
    N = proc.horizon
    X = proc.paths
    decisions = [(s, cell) for s in range(1, N) for cell in proc.cells(s)]

    if isinstance(objective, StageCost):
        total = []
        for s, cell in decisions:
            best = min(
                math.fsum(float(proc.probs[k]) * float(objective.fn(s, X[k], h)) for k in cell)
                for h in G
            )
            total.append(best)
        return math.fsum(total)

    count = len(G) ** len(decisions)
    if count > cap:
        raise ValueError(f"{count} strategies exceed the exhaustive-search cap {cap}")
    best = math.inf
    H = np.zeros_like(X)
    for choice in itertools.product(range(len(G)), repeat=len(decisions)):
        for (s, cell), g in zip(decisions, choice):
            H[cell, s] = G[g]
        HX = _integral(X, H)
        val = math.fsum(
            float(proc.probs[k]) * float(objective(X[k], HX[k], H[k])) for k in range(proc.n_atoms)
        )
        best = min(best, val)
    return best
