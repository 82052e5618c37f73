"""Quantization of processes and block approximation of couplings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .canonical import NestedAtom, canonical_process, information_process, nested_distribution
from .metric import BicausalCoupling, RawCoupling, ground_cost, nested_distance
from .ot import TransportPlan
from .process import FilteredProcess, PathLaw, plain_process

__all__ = [
    "QuantizationGrid",
    "BlockPartition",
    "quantize",
    "quantize_with_bound",
    "covering_grid",
    "adapted_empirical",
    "plan_cost",
    "block_approximate",
    "block_partition_from_plan",
    "diameter_blocks",
    "pullback_coupling",
]

MARGINAL_TOL = 1e-10


class QuantizationGrid:
    """Finite set of candidate points per time; ties go to the lowest index."""

    def __init__(self, levels: Sequence):
        pts = []
        for t, lv in enumerate(levels, start=1):
            a = np.asarray(lv, dtype=float)
            if a.ndim == 1:
                a = a[:, None]
            if a.size == 0:
                raise ValueError(f"grid level {t} is empty")
            pts.append(a)
        if not pts:
            raise ValueError("grid has no levels")
        self.levels = pts

    @property
    def horizon(self):
        return len(self.levels)

    def nearest(self, t: int, values: np.ndarray) -> np.ndarray:
        """Nearest grid point at time ``t`` for each row of ``values``."""
        G = self.levels[t - 1]
        d2 = ((values[:, None, :] - G[None, :, :]) ** 2).sum(axis=2)
        return G[np.argmin(d2, axis=1)]  # argmin keeps the first minimizer

    def to_json(self):
        return {"levels": [lv.tolist() for lv in self.levels]}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["levels"])


def quantize_with_bound(proc: FilteredProcess, grid: QuantizationGrid, p: float = 1.0):
    """Quantized process and the cost of the diagonal coupling to it.

    The bound is ``(E sum_t |X_t - phi_t(X_t)|^p)^(1/p)`` and dominates
    ``AW_p(proc, output)``.
    """
    if grid.horizon != proc.horizon:
        raise ValueError("grid horizon does not match the process")
    Y = np.stack([grid.nearest(t, proc.paths[:, t - 1]) for t in range(1, proc.horizon + 1)], axis=1)
    if Y.shape != proc.paths.shape:
        raise ValueError("grid dimension does not match the process")
    err = np.linalg.norm(proc.paths - Y, axis=2) ** p
    bound = math.fsum((proc.probs * err.sum(axis=1)).tolist()) ** (1.0 / p)
    q = FilteredProcess(proc.probs, Y, proc.filtration)
    return canonical_process(nested_distribution(q)), bound


def quantize(proc: FilteredProcess, grid: QuantizationGrid) -> FilteredProcess:
    """Map values to nearest grid points, keep the filtration, merge equal nodes."""
    return quantize_with_bound(proc, grid)[0]


def covering_grid(proc: FilteredProcess, eps: float, p: float = 1.0) -> QuantizationGrid:
    """Grid guaranteeing ``AW_p(proc, quantize(proc, grid)) <= eps``.

    Values are rounded to a cubic lattice of spacing ``2 eps / (sqrt(d) N^(1/p))``
    (slightly shrunk), so each time step moves by at most ``eps / N^(1/p)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    N, d = proc.horizon, proc.dim
    h = 0.999 * 2.0 * eps / (math.sqrt(d) * N ** (1.0 / p))
    levels = []
    for t in range(N):
        snapped = np.round(proc.paths[:, t, :] / h) * h
        levels.append(np.unique(snapped, axis=0))
    return QuantizationGrid(levels)


def adapted_empirical(samples, grid: QuantizationGrid, weights=None) -> FilteredProcess:
    """Finite model from sample paths: quantize each path, then take the plain process.

    ``samples`` is an ``(m, N)`` or ``(m, N, d)`` array, or a sequence of
    ``(weight, path)`` pairs.
    """
    if weights is None and len(samples) and isinstance(samples[0], tuple):
        weights = [w for w, _ in samples]
        samples = [x for _, x in samples]
    S = np.asarray(samples, dtype=float)
    if S.ndim == 2:
        S = S[:, :, None]
    if S.shape[0] == 0:
        raise ValueError("no samples")
    w = np.full(S.shape[0], 1.0 / S.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    w = w / math.fsum(w.tolist())
    Q = np.stack([grid.nearest(t, S[:, t - 1]) for t in range(1, S.shape[1] + 1)], axis=1)
    return plain_process(PathLaw(w, Q))


# -- block approximation -------------------------------------------------

@dataclass
class BlockPartition:
    """Blocks of occurring nested atoms per time, for both sides.

    ``blocks_x[t]`` maps each time-``t`` atom of the first process to a
    block label (``t = 1..N``; index 0 is unused), likewise ``blocks_y``.
    ``weights`` optionally fixes ``w_t^{A,B}`` per parent pair
    ``(t-1, i, j)`` as a dict ``{(A, B): mass}``; when omitted the weights
    are read off the coupling being approximated.
    """

    blocks_x: List[Dict[NestedAtom, int]]
    blocks_y: List[Dict[NestedAtom, int]]
    weights: Optional[Dict[Tuple[int, int, int], Dict[Tuple[int, int], float]]] = None


def _levels_value(plan: BicausalCoupling, ground):
    """Expected remaining cost per atom pair under ``plan``'s kernels."""
    N = plan.horizon
    V: List[np.ndarray] = [None] * (N + 1)  # type: ignore
    for t in range(N, -1, -1):
        ax, ay = plan.levels_x[t], plan.levels_y[t]
        if t > 0:
            G = np.asarray(ground(np.array([a.value for a in ax]), np.array([b.value for b in ay])))
        else:
            G = np.zeros((1, 1))
        if t == N:
            V[t] = G
            continue
        ix = {a: i for i, a in enumerate(plan.levels_x[t + 1])}
        iy = {b: j for j, b in enumerate(plan.levels_y[t + 1])}
        C = G.astype(float).copy()
        for (s, i, j), K in plan.kernels.items():
            if s != t:
                continue
            ci = [ix[c] for _, c in ax[i].children]
            cj = [iy[c] for _, c in ay[j].children]
            sub = V[t + 1][np.ix_(ci, cj)]
            nz = K.matrix > 0
            C[i, j] += math.fsum((K.matrix[nz] * sub[nz]).tolist())
        V[t] = C
    return V


def plan_cost(plan: BicausalCoupling, ground=None) -> float:
    """``E[sum_t d^p(X_t, Y_t)]`` under a kernel-form coupling."""
    ground = ground or ground_cost(plan.p)
    return float(_levels_value(plan, ground)[0][0, 0])


def block_partition_from_plan(plan: BicausalCoupling) -> BlockPartition:
    """Singleton blocks: every occurring atom is its own block."""
    bx = [dict()] + [{a: i for i, a in enumerate(lv)} for lv in plan.levels_x[1:]]
    by = [dict()] + [{b: j for j, b in enumerate(lv)} for lv in plan.levels_y[1:]]
    return BlockPartition(bx, by)


def _greedy_blocks(atoms: Sequence[NestedAtom], eps: float, p: float) -> Dict[NestedAtom, int]:
    seeds: List[NestedAtom] = []
    out = {}
    for a in atoms:
        for k, s in enumerate(seeds):
            if nested_distance(a, s, p) <= eps / 2.0:
                out[a] = k
                break
        else:
            out[a] = len(seeds)
            seeds.append(a)
    return out


def diameter_blocks(plan: BicausalCoupling, eps: float) -> BlockPartition:
    """Blocks of nested-metric diameter at most ``eps`` (greedy, seed radius ``eps/2``)."""
    bx = [dict()] + [_greedy_blocks(lv, eps, plan.p) for lv in plan.levels_x[1:]]
    by = [dict()] + [_greedy_blocks(lv, eps, plan.p) for lv in plan.levels_y[1:]]
    return BlockPartition(bx, by)


def block_approximate(plan: BicausalCoupling, partitions: BlockPartition) -> BicausalCoupling:
    """Product-form coupling that only keeps the block-to-block masses of ``plan``.

    Inside a pair of blocks ``(A, B)`` the mass ``w^{A,B}`` is spread as
    ``z^+(.|A) x zhat^+(.|B)``. Singleton blocks reproduce ``plan``.
    """
    new = {}
    for (t, i, j), K in plan.kernels.items():
        a, b = plan.levels_x[t][i], plan.levels_y[t][j]
        lab_a = [partitions.blocks_x[t + 1][c] for _, c in a.children]
        lab_b = [partitions.blocks_y[t + 1][c] for _, c in b.children]
        wa, wb = a.weights, b.weights
        mass_a: Dict[int, float] = {}
        mass_b: Dict[int, float] = {}
        for r, A in enumerate(lab_a):
            mass_a[A] = mass_a.get(A, 0.0) + wa[r]
        for s, B in enumerate(lab_b):
            mass_b[B] = mass_b.get(B, 0.0) + wb[s]

        if partitions.weights is not None:
            w = dict(partitions.weights[(t, i, j)])
        else:
            w = {}
            for r, A in enumerate(lab_a):
                for s, B in enumerate(lab_b):
                    if K.matrix[r, s] > 0:
                        w[(A, B)] = w.get((A, B), 0.0) + K.matrix[r, s]
        for A, m in mass_a.items():
            if abs(math.fsum(v for (a_, _), v in w.items() if a_ == A) - m) > MARGINAL_TOL:
                raise ValueError(f"block weights violate the first marginal at {(t, i, j)}")
        for B, m in mass_b.items():
            if abs(math.fsum(v for (_, b_), v in w.items() if b_ == B) - m) > MARGINAL_TOL:
                raise ValueError(f"block weights violate the second marginal at {(t, i, j)}")

        singleton = len(mass_a) == len(lab_a) and len(mass_b) == len(lab_b)
        if singleton and partitions.weights is None:
            M = K.matrix.copy()
        else:
            M = np.zeros_like(K.matrix)
            for r, A in enumerate(lab_a):
                for s, B in enumerate(lab_b):
                    wab = w.get((A, B), 0.0)
                    if wab > 0:
                        M[r, s] = wab * (wa[r] / mass_a[A]) * (wb[s] / mass_b[B])
        new[(t, i, j)] = TransportPlan(M, 0.0)

    out = BicausalCoupling(plan.x, plan.y, plan.levels_x, plan.levels_y, new, 0.0, plan.p)
    V = _levels_value(out, ground_cost(plan.p))
    for (t, i, j), K in new.items():
        a, b = plan.levels_x[t][i], plan.levels_y[t][j]
        ix = out._ix[t + 1]
        iy = out._iy[t + 1]
        sub = V[t + 1][np.ix_([ix[c] for _, c in a.children], [iy[c] for _, c in b.children])]
        nz = K.matrix > 0
        new[(t, i, j)] = TransportPlan(K.matrix, math.fsum((K.matrix[nz] * sub[nz]).tolist()))
    out.cost = float(V[0][0, 0])
    return out


def _route(plan_levels, index, root, ip, k, N):
    """Per time: (parent index, child position, child weight) along atom ``k``."""
    out = []
    parent = root
    for t in range(N):
        child = ip[t][k]
        i = index[t][parent]
        canon = plan_levels[t][i]
        r = next(r for r, (_, c) in enumerate(canon.children) if c == child)
        out.append((i, r, canon.children[r][0]))
        parent = child
    return out


def pullback_coupling(plan: BicausalCoupling, x: FilteredProcess, y: FilteredProcess) -> RawCoupling:
    """Bicausal coupling of the original processes with the same image as ``plan``.

    The density against ``P^x x P^y`` is the product over times of
    ``k_t(child_x, child_y) / (z_t^+(child_x) zhat_t^+(child_y))``, where
    children are the information-process values of the two atoms.
    """
    if nested_distribution(x) != plan.x or nested_distribution(y) != plan.y:
        raise ValueError("plan was not built from these processes")
    N = x.horizon
    ipx, ipy = information_process(x), information_process(y)
    rx = [_route(plan.levels_x, plan._ix, plan.x, ipx, k, N) for k in range(x.n_atoms)]
    ry = [_route(plan.levels_y, plan._iy, plan.y, ipy, l, N) for l in range(y.n_atoms)]
    M = np.zeros((x.n_atoms, y.n_atoms))
    for k, route_x in enumerate(rx):
        for l, route_y in enumerate(ry):
            dens = 1.0
            for t in range(N):
                i, r, wa = route_x[t]
                j, s, wb = route_y[t]
                m = plan.kernels[(t, i, j)].matrix[r, s]
                if m == 0.0:
                    dens = 0.0
                    break
                dens *= m / (wa * wb)
            M[k, l] = x.probs[k] * y.probs[l] * dens
    return RawCoupling(M, x, y)
