"""Adapted Wasserstein distance by backward dynamic programming.

Both inputs are reduced to nested distributions. At the terminal level the
pair cost is the ground cost of the values; one level up it is the ground
cost plus the optimal transport cost between the two child laws under the
level below. The distance is the transport cost between the two root laws,
raised to ``1/p``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .canonical import (
    NestedAtom,
    NestedDistribution,
    canonical_process,
    chain_index,
    levels,
    nested_distribution,
)
from .ot import TransportPlan, solve_ot
from .process import FilteredProcess, PathLaw, plain_process

__all__ = [
    "BicausalCoupling",
    "RawCoupling",
    "adapted_distance",
    "nested_distance",
    "aw_between_laws",
    "flatten",
    "is_causal",
    "coupling_cost",
    "ground_cost",
    "default_threads",
]

CAUSAL_TOL = 1e-10
# below this many pairs per level a thread pool costs more than it saves
_PARALLEL_MIN_PAIRS = 256

Ground = Callable[[np.ndarray, np.ndarray], np.ndarray]


def default_threads() -> int:
    env = os.environ.get("ADAPTED_OT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def ground_cost(p: float) -> Ground:
    """Pairwise ``|x - y|^p`` (Euclidean) between two stacks of points."""

    def cost(a, b):
        diff = a[:, None, :] - b[None, :, :]
        if diff.shape[2] == 1:
            r = np.abs(diff[:, :, 0])
            return r if p == 1 else r**p
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        if p == 2:
            return sq
        return np.sqrt(sq) ** p

    return cost


def _as_nested(x) -> NestedAtom:
    if isinstance(x, NestedAtom):
        return x
    if isinstance(x, FilteredProcess):
        return nested_distribution(x)
    raise TypeError(f"expected a process or nested distribution, got {type(x).__name__}")


@dataclass
class BicausalCoupling:
    """Optimal bicausal coupling in kernel form.

    ``levels_x[t]`` / ``levels_y[t]`` list the distinct time-``t`` nested
    atoms (``t = 0`` is the root). ``kernels[(t, i, j)]`` couples the child
    laws of ``levels_x[t][i]`` and ``levels_y[t][j]``; ``kernels[(0, 0, 0)]``
    is the time-1 plan. ``cost`` is the optimal value of ``E[sum_t d^p]``.
    """

    x: NestedAtom
    y: NestedAtom
    levels_x: List[List[NestedAtom]]
    levels_y: List[List[NestedAtom]]
    kernels: Dict[Tuple[int, int, int], TransportPlan]
    cost: float
    p: float
    pair_costs: Optional[List[np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        self._ix = [{a: i for i, a in enumerate(lv)} for lv in self.levels_x]
        self._iy = [{a: j for j, a in enumerate(lv)} for lv in self.levels_y]

    @property
    def horizon(self) -> int:
        return len(self.levels_x) - 1

    @property
    def root(self) -> TransportPlan:
        return self.kernels[(0, 0, 0)]

    def index(self, t: int, a: NestedAtom, b: NestedAtom) -> Tuple[int, int]:
        return self._ix[t][a], self._iy[t][b]

    def kernel(self, t: int, a: NestedAtom, b: NestedAtom) -> TransportPlan:
        i, j = self.index(t, a, b)
        return self.kernels[(t, i, j)]

    def reachable(self):
        """``(t, i, j)`` triples carrying positive mass, level by level."""
        out = [[(0, 0, 0)]]
        for t in range(self.horizon - 1):
            nxt = set()
            for key in out[-1]:
                a, b = self.levels_x[t][key[1]], self.levels_y[t][key[2]]
                M = self.kernels[key].matrix
                for r, s in zip(*np.nonzero(M)):
                    i, j = self.index(t + 1, a.children[r][1], b.children[s][1])
                    nxt.add((t + 1, i, j))
            out.append(sorted(nxt))
        return out


@dataclass
class RawCoupling:
    """Coupling matrix on ``Omega^x x Omega^y`` together with both processes."""

    matrix: np.ndarray
    x: FilteredProcess
    y: FilteredProcess

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (self.x.n_atoms, self.y.n_atoms):
            raise ValueError("coupling shape does not match the processes")
        if np.any(self.matrix < 0):
            raise ValueError("coupling has negative entries")
        if not (
            np.allclose(self.matrix.sum(axis=1), self.x.probs, rtol=0, atol=CAUSAL_TOL)
            and np.allclose(self.matrix.sum(axis=0), self.y.probs, rtol=0, atol=CAUSAL_TOL)
        ):
            raise ValueError("coupling marginals do not match the atom probabilities")


def _solve_pair(args):
    wa, wb, C = args
    return solve_ot(wa, wb, C)


def adapted_distance(x, y, p: float = 1.0, ground: Optional[Ground] = None,
                     threads: Optional[int] = None) -> Tuple[float, BicausalCoupling]:
    """Adapted Wasserstein distance ``AW_p(x, y)`` and an optimal coupling.

    Parameters
    ----------
    x, y : FilteredProcess or NestedDistribution
        Processes of equal horizon and dimension.
    p : float
        Exponent, ``p >= 1``.
    ground : callable, optional
        ``ground(A, B)`` returns the ``(len(A), len(B))`` matrix of per-time
        costs ``d^p`` between two stacks of values. Default ``|a - b|^p``.
    threads : int, optional
        Worker threads for the per-level transport problems. Defaults to
        ``ADAPTED_OT_THREADS`` or the CPU count; results do not depend on it.

    Returns
    -------
    value : float
    plan : BicausalCoupling
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    nx, ny = _as_nested(x), _as_nested(y)
    if nx.depth != ny.depth:
        raise ValueError(f"horizon mismatch: {nx.depth} vs {ny.depth}")
    if nx.depth and len(nx.children[0][1].value) != len(ny.children[0][1].value):
        raise ValueError("state dimension mismatch")
    ground = ground or ground_cost(p)
    threads = default_threads() if threads is None else max(1, int(threads))

    Lx, Ly = levels(nx), levels(ny)
    N = len(Lx) - 1
    kernels: Dict[Tuple[int, int, int], TransportPlan] = {}
    costs: List[np.ndarray] = [None] * (N + 1)  # type: ignore
    for t in range(N, -1, -1):
        ax, ay = Lx[t], Ly[t]
        if t > 0:
            G = np.asarray(
                ground(np.array([a.value for a in ax]), np.array([b.value for b in ay])),
                dtype=float,
            )
        else:
            G = np.zeros((1, 1))
        if t == N:
            costs[t] = G
            continue
        ix = [{a: i for i, a in enumerate(Lx[t + 1])}, {b: j for j, b in enumerate(Ly[t + 1])}]
        kids_x = [([ix[0][c] for _, c in a.children], a.weights) for a in ax]
        kids_y = [([ix[1][c] for _, c in b.children], b.weights) for b in ay]
        below = costs[t + 1]
        jobs = [
            (kx[1], ky[1], below[np.ix_(kx[0], ky[0])])
            for kx in kids_x
            for ky in kids_y
        ]
        if threads > 1 and len(jobs) >= _PARALLEL_MIN_PAIRS:
            with ThreadPoolExecutor(threads) as pool:
                plans = list(pool.map(_solve_pair, jobs, chunksize=32))
        else:
            plans = [_solve_pair(j) for j in jobs]
        C = np.empty((len(ax), len(ay)))
        m = len(ay)
        for k, plan in enumerate(plans):
            i, j = divmod(k, m)
            kernels[(t, i, j)] = plan
            C[i, j] = G[i, j] + plan.cost
        costs[t] = C

    total = float(costs[0][0, 0])
    value = max(total, 0.0) ** (1.0 / p)
    return value, BicausalCoupling(nx, ny, Lx, Ly, kernels, total, p, costs)


def nested_distance(a: NestedAtom, b: NestedAtom, p: float = 1.0) -> float:
    """Distance between two nested atoms (or distributions) of equal depth.

    For atoms the value difference at the top level counts as well.
    """
    if isinstance(a, NestedDistribution) and isinstance(b, NestedDistribution):
        return adapted_distance(a, b, p)[0]
    top = float(ground_cost(p)(np.array([a.value]), np.array([b.value]))[0, 0]) if a.value else 0.0
    if not a.children:
        return top ** (1.0 / p)
    _, plan = adapted_distance(NestedDistribution(a.children, canonical=True),
                               NestedDistribution(b.children, canonical=True), p)
    return (top + plan.cost) ** (1.0 / p)


def aw_between_laws(mu: PathLaw, nu: PathLaw, p: float = 1.0) -> float:
    """``AW_p`` between two path laws, each carrying its own filtration."""
    return adapted_distance(plain_process(mu), plain_process(nu), p)[0]


def flatten(plan: BicausalCoupling) -> RawCoupling:
    """Path-pair coupling ``pi_1 x k_1 x .. x k_{N-1}`` on the canonical processes."""
    cx = canonical_process(plan.x)
    cy = canonical_process(plan.y)
    rows = {tuple(id(a) for _, a in ch): r for r, ch in enumerate(chain_index(plan.x))}
    cols = {tuple(id(a) for _, a in ch): s for s, ch in enumerate(chain_index(plan.y))}
    M = np.zeros((cx.n_atoms, cy.n_atoms))

    def walk(t, a, b, pa, pb, mass):
        if not a.children:
            M[rows[pa], cols[pb]] += mass
            return
        K = plan.kernel(t, a, b).matrix
        for r, s in zip(*np.nonzero(K)):
            ca, cb = a.children[r][1], b.children[s][1]
            walk(t + 1, ca, cb, pa + (id(ca),), pb + (id(cb),), mass * K[r, s])

    walk(0, plan.x, plan.y, (), (), 1.0)
    return RawCoupling(M, cx, cy)


def coupling_cost(pi: RawCoupling, p: float = 1.0, ground: Optional[Ground] = None) -> float:
    """``E_pi[sum_t d^p(X_t, Y_t)]``."""
    ground = ground or ground_cost(p)
    total = np.zeros(pi.matrix.shape)
    for t in range(pi.x.horizon):
        total += ground(pi.x.paths[:, t, :], pi.y.paths[:, t, :])
    nz = pi.matrix > 0
    return math.fsum((pi.matrix[nz] * total[nz]).tolist())


def _causal_one_way(M, px: FilteredProcess, py: FilteredProcess) -> bool:
    N = px.horizon
    atoms_N = px.cells(N)
    for t in range(1, N):
        # mass of each F_t^Y cell against every atom of x
        cols = py.cells(t)
        per_atom = np.stack([M[:, c].sum(axis=1) for c in cols], axis=1)
        fine = np.empty((len(atoms_N), len(cols)))
        owner = px.cell_ids(t)
        coarse = {}
        for cell in px.cells(t):
            coarse[int(owner[cell[0]])] = per_atom[cell].sum(axis=0) / px.probs[cell].sum()
        for k, A in enumerate(atoms_N):
            fine[k] = per_atom[A].sum(axis=0) / px.probs[A].sum()
            if np.max(np.abs(fine[k] - coarse[int(owner[A[0]])])) > CAUSAL_TOL:
                return False
    return True


def is_causal(pi, x: FilteredProcess = None, y: FilteredProcess = None,
              direction: str = "both") -> bool:
    """Finite causality check for a coupling of two processes.

    From ``x`` to ``y``: for every ``t`` and every ``F^y_t`` cell ``B``, the
    conditional probability of ``B`` given the full ``x``-information equals
    the one given ``F^x_t``. ``direction`` is ``"x->y"``, ``"y->x"`` or
    ``"both"`` (bicausal).
    """
    if isinstance(pi, RawCoupling):
        x = x or pi.x
        y = y or pi.y
        M = pi.matrix
    else:
        M = RawCoupling(pi, x, y).matrix
    if x.horizon != y.horizon:
        raise ValueError("horizon mismatch")
    if direction not in ("x->y", "y->x", "both"):
        raise ValueError(f"unknown direction {direction!r}")
    ok = True
    if direction in ("x->y", "both"):
        ok = _causal_one_way(M, x, y)
    if ok and direction in ("y->x", "both"):
        ok = _causal_one_way(M.T, y, x)
    return ok
