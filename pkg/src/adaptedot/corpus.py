"""Random finite processes for tests, demos and benchmarks.

Conditional probabilities are dyadic and values are multiples of 1/2, so
weights and sums stay exact in floating point.
"""

from __future__ import annotations

from typing import List

import numpy as np

from .analytics import StoppingCost
from .process import FilteredProcess

__all__ = ["random_process", "random_martingale", "redundant_copy", "random_cost", "corpus"]


def _dyadic_split(rng, k: int, total: int = 8) -> List[float]:
    cuts = np.sort(rng.choice(np.arange(1, total), size=k - 1, replace=False)) if k > 1 else []
    parts = np.diff(np.r_[0, cuts, total])
    return [float(x) / total for x in parts]


def _grow(rng, N, max_atoms, split_fn, max_branch=3):
    """Random tree: returns leaf probabilities, paths and node ids per level."""
    nodes = [(1.0, [], [])]  # (prob, path, node-id chain)
    counter = 0
    for t in range(N):
        nxt = []
        room = max_atoms - len(nodes)
        for prob, path, chain in nodes:
            b = 1 + int(rng.integers(0, min(max_branch, 1 + room)))
            room -= b - 1
            ws, vals = split_fn(rng, b, path)
            for w, v in zip(ws, vals):
                counter += 1
                nxt.append((prob * w, path + [v], chain + [counter]))
        nodes = nxt
    probs = np.array([n[0] for n in nodes])
    paths = np.array([n[1] for n in nodes], dtype=float)
    filt = np.array([[n[2][t] for n in nodes] for t in range(N)])
    return probs, paths, filt


def random_process(rng, N: int = 2, max_atoms: int = 6, d: int = 1, values=(-1.0, -0.5, 0.0, 0.5, 1.0),
                   coarsen: float = 0.3) -> FilteredProcess:
    """Tree-shaped process with small values drawn from ``values``.

    With probability ``coarsen`` per time, ``F_t`` is merged back to
    ``F_{t-1}`` wherever the values allow it, which produces processes that
    are not plain.
    """
    vals = np.asarray(values, dtype=float)

    def split(rng, b, path):
        ws = _dyadic_split(rng, b)
        return ws, [rng.choice(vals, size=d) for _ in range(b)]

    probs, paths, filt = _grow(rng, N, max_atoms, split)
    filt = filt.copy()
    for t in range(1, N):
        if rng.random() < coarsen:
            # hide the time-t branching when X_t is already known at t-1 (keeps adaptedness)
            prev = filt[t - 1]
            for c in np.unique(prev):
                idx = np.flatnonzero(prev == c)
                if np.all(paths[idx, t] == paths[idx[0], t]):
                    filt[t, idx] = filt[t, idx[0]]
    # refinement must still hold at later times
    for t in range(1, N):
        for c in np.unique(filt[t]):
            idx = np.flatnonzero(filt[t] == c)
            if len(np.unique(filt[t - 1, idx])) > 1:
                filt[t, idx] = filt[t - 1, idx]
    return FilteredProcess(probs, paths, filt)


def random_martingale(rng, N: int = 3, max_atoms: int = 8, d: int = 1, step: float = 1.0) -> FilteredProcess:
    """Tree martingale: each node moves by ``0``, ``+-step`` with symmetric dyadic weights."""

    def split(rng, b, path):
        here = np.zeros(d) if not path else path[-1]
        if not path:
            return _dyadic_split(rng, b), [rng.integers(-2, 3, size=d) / 2.0 for _ in range(b)]
        moves = rng.choice([-1.0, 1.0], size=d) * step
        if b == 1:
            return [1.0], [here]
        if b == 2:
            return [0.5, 0.5], [here - moves, here + moves]
        return [0.25, 0.5, 0.25], [here - moves, here, here + moves]

    probs, paths, filt = _grow(rng, N, max_atoms, split)
    return FilteredProcess(probs, paths, filt)


def redundant_copy(rng, proc: FilteredProcess, splits: int = 2) -> FilteredProcess:
    """Same nested distribution on a larger space: some atoms are split in two.

    Both halves keep the original path and stay in the same cell of every
    partition, so nothing observable changes.
    """
    probs, paths, filt = list(proc.probs), list(proc.paths), [list(r) for r in proc.filtration]
    for _ in range(splits):
        k = int(rng.integers(0, len(probs)))
        half = probs[k] / 2.0
        probs[k] = half
        probs.append(half)
        paths.append(paths[k])
        for row in filt:
            row.append(row[k])
    order = rng.permutation(len(probs))
    return FilteredProcess(np.array(probs)[order], np.array(paths)[order], np.array(filt)[:, order])


def random_cost(rng, N: int, d: int = 1, lipschitz: float = 1.0) -> StoppingCost:
    """Non-anticipative costs ``c_t = min(a_t + sum_{s<=t} b_ts . x_s, m_t)`` with ``|b_ts| <= L``.

    Each ``c_t`` is ``L``-Lipschitz for ``sum_t |x_t - y_t|``.
    """
    costs = []
    for t in range(1, N + 1):
        a = float(rng.uniform(-1, 1))
        cap = float(rng.uniform(0, 2))
        B = rng.uniform(-1, 1, size=(t, d))
        B *= lipschitz / np.maximum(1.0, np.linalg.norm(B, axis=1, keepdims=True))

        def c(x, a=a, cap=cap, B=B, t=t):
            return min(a + float(np.sum(B * x[:t])), cap)

        costs.append(c)
    return StoppingCost(costs, lipschitz=lipschitz)


def corpus(seed: int = 0, size: int = 50, N_max: int = 4, max_atoms: int = 12, d: int = 1,
           include_redundant: bool = True) -> List[FilteredProcess]:
    """Mixed list of random processes, martingales and redundant copies."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < size:
        N = int(rng.integers(1, N_max + 1))
        kind = rng.random()
        if kind < 0.6:
            out.append(random_process(rng, N, max_atoms, d))
        elif kind < 0.85:
            out.append(random_martingale(rng, N, max_atoms, d))
        elif include_redundant and out:
            base = out[int(rng.integers(0, len(out)))]
            if base.n_atoms + 2 <= max_atoms:
                out.append(redundant_copy(rng, base))
    return out
