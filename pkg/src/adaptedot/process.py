"""Finite filtered processes.

A process lives on a finite sample space ``{0, .., n-1}`` with atom
probabilities, one ``N x d`` path per atom and, for each time ``t = 1..N``,
a partition of the atoms given as one integer cell id per atom. ``F_0`` is
always the trivial partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

__all__ = [
    "PROB_TOL",
    "FilteredProcess",
    "PathLaw",
    "ValidationReport",
    "validate",
    "plain_process",
    "full_info_process",
    "independent_coin_extension",
    "relabel",
]

PROB_TOL = 1e-12


def relabel(ids) -> np.ndarray:
    """Dense cell ids in order of first occurrence."""
    seen = {}
    out = np.empty(len(ids), dtype=np.int64)
    for k, c in enumerate(ids):
        out[k] = seen.setdefault(int(c), len(seen))
    return out


def _prefix_ids(paths: np.ndarray, t: int) -> np.ndarray:
    """Cell ids of the partition generated by the first ``t`` path values."""
    keys = [paths[k, :t].tobytes() for k in range(paths.shape[0])]
    seen = {}
    return np.array([seen.setdefault(key, len(seen)) for key in keys], dtype=np.int64)


class PathLaw:
    """Finitely supported law on ``(R^d)^N`` with duplicate paths merged.

    Paths are stored in lexicographic order so two equal laws have equal
    arrays.
    """

    def __init__(self, weights, paths, tol=PROB_TOL):
        w = np.asarray(weights, dtype=float).reshape(-1)
        P = np.asarray(paths, dtype=float)
        if P.ndim == 2:
            P = P[:, :, None]
        if P.ndim != 3 or P.shape[0] != w.size or w.size == 0:
            raise ValueError("paths must have shape (k, N, d) matching the weights")
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise ValueError("path weights must be non-negative")
        if abs(math.fsum(w.tolist()) - 1.0) > tol:
            raise ValueError("path weights must sum to 1")
        if not np.all(np.isfinite(P)):
            raise ValueError("paths must be finite")

        merged = {}
        for k in range(w.size):
            if w[k] <= 0:
                continue
            key = tuple(P[k].reshape(-1).tolist())
            merged.setdefault(key, []).append(float(w[k]))
        keys = sorted(merged)
        N, d = P.shape[1], P.shape[2]
        self.horizon = N
        self.dim = d
        self.weights = np.array([math.fsum(merged[k]) for k in keys])
        self.paths = np.array(keys, dtype=float).reshape(len(keys), N, d)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, Sequence]]):
        pairs = list(pairs)
        return cls([w for w, _ in pairs], [np.asarray(x, dtype=float) for _, x in pairs])

    def __len__(self):
        return self.weights.size

    def __iter__(self):
        return iter(zip(self.weights.tolist(), self.paths))

    def __eq__(self, other):
        if not isinstance(other, PathLaw):
            return NotImplemented
        return (
            self.paths.shape == other.paths.shape
            and np.array_equal(self.paths, other.paths)
            and np.array_equal(self.weights, other.weights)
        )

    def allclose(self, other, tol=1e-12):
        return (
            self.paths.shape == other.paths.shape
            and np.array_equal(self.paths, other.paths)
            and np.allclose(self.weights, other.weights, rtol=0, atol=tol)
        )

    def __repr__(self):
        return f"PathLaw(N={self.horizon}, d={self.dim}, support={len(self)})"


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`.

    ``violations`` holds one message per broken invariant, ``pruned`` the
    indices of zero-probability atoms that were removed. ``process`` is the
    pruned process (None when violations were found).
    """

    violations: List[str] = field(default_factory=list)
    pruned: List[int] = field(default_factory=list)
    process: "FilteredProcess | None" = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        # truthy when there is something to report
        return bool(self.violations or self.pruned)


def _check(probs, paths, filtration) -> List[str]:
    issues = []
    n = probs.shape[0] if probs.ndim == 1 else -1
    if probs.ndim != 1 or n == 0:
        return ["atom_probs must be a non-empty vector"]
    if paths.ndim != 3 or paths.shape[0] != n:
        return [f"paths must have shape (n, N, d) with n={n}, got {paths.shape}"]
    N = paths.shape[1]
    if N < 1 or paths.shape[2] < 1:
        return ["horizon and dim must be >= 1"]
    if filtration.shape != (N, n):
        return [f"filtration must have shape (N, n)=({N}, {n}), got {filtration.shape}"]

    if np.any(np.isnan(probs)) or np.any(probs < 0):
        issues.append("negative or NaN atom probability")
    elif abs(math.fsum(probs.tolist()) - 1.0) > PROB_TOL:
        issues.append(f"atom probabilities sum to {math.fsum(probs.tolist())!r}, not 1")
    if not np.all(np.isfinite(paths)):
        issues.append("paths contain non-finite values")

    for t in range(1, N + 1):
        ids = filtration[t - 1]
        if t < N:
            nxt = filtration[t]
            owner = {}
            for k in range(n):
                if owner.setdefault(int(nxt[k]), int(ids[k])) != int(ids[k]):
                    issues.append(f"refinement violated: F_{t + 1} is not finer than F_{t}")
                    break
        first = {}
        for k in range(n):
            j = first.setdefault(int(ids[k]), k)
            if j != k and not np.array_equal(paths[j, :t], paths[k, :t]):
                s = int(np.flatnonzero(np.any(paths[j, :t] != paths[k, :t], axis=1))[0]) + 1
                issues.append(f"adaptedness violated at t={t}: X_{s} varies within an F_{t} cell")
                break
    return issues


class FilteredProcess:
    """Finite filtered process with an ``R^d``-valued adapted path.

    Parameters
    ----------
    probs : array-like, shape (n,)
        Atom probabilities.
    paths : array-like, shape (n, N, d) or (n, N)
        Path values ``X_1..X_N`` per atom; a 2-D array means ``d = 1``.
    filtration : array-like, shape (N, n), optional
        Row ``t-1`` holds the ``F_t`` cell id of every atom. Defaults to
        the filtration generated by the path (plain process).
    check : bool
        Validate and prune on construction; raises ``ValueError`` on
        violations. Pass ``False`` to build deliberately broken inputs.
    """

    __slots__ = ("probs", "paths", "filtration", "_cells")

    def __init__(self, probs, paths, filtration=None, check=True):
        probs = np.array(probs, dtype=float).reshape(-1)
        paths = np.array(paths, dtype=float)
        if paths.ndim == 2:
            paths = paths[:, :, None]
        if filtration is None:
            filtration = np.array([_prefix_ids(paths, t) for t in range(1, paths.shape[1] + 1)])
        filtration = np.array(filtration, dtype=np.int64).reshape(
            (-1, probs.shape[0]) if probs.size else (0, 0)
        )
        if check:
            issues = _check(probs, paths, filtration)
            if issues:
                raise ValueError("; ".join(issues))
            keep = probs > 0
            if not np.all(keep):
                probs, paths, filtration = probs[keep], paths[keep], filtration[:, keep]
            filtration = np.array([relabel(r) for r in filtration], dtype=np.int64)
        for arr in (probs, paths, filtration):
            arr.setflags(write=False)
        self.probs = probs
        self.paths = paths
        self.filtration = filtration
        self._cells = {}

    @property
    def horizon(self) -> int:
        return self.paths.shape[1]

    @property
    def dim(self) -> int:
        return self.paths.shape[2]

    @property
    def n_atoms(self) -> int:
        return self.probs.shape[0]

    def __len__(self):
        return self.n_atoms

    def __repr__(self):
        return f"FilteredProcess(n={self.n_atoms}, N={self.horizon}, d={self.dim})"

    def cell_ids(self, t: int) -> np.ndarray:
        """Cell id per atom for ``F_t``; ``t = 0`` is the trivial partition."""
        if t == 0:
            return np.zeros(self.n_atoms, dtype=np.int64)
        return self.filtration[t - 1]

    def cells(self, t: int) -> List[np.ndarray]:
        """Atoms of each ``F_t`` cell, ordered by cell id."""
        if t not in self._cells:
            ids = self.cell_ids(t)
            order = np.argsort(ids, kind="stable")
            bounds = np.flatnonzero(np.diff(ids[order])) + 1
            self._cells[t] = np.split(order, bounds)
        return self._cells[t]

    def cond_expect(self, values, t: int) -> np.ndarray:
        """``E[values | F_t]`` as a per-atom array (leading axis = atoms)."""
        v = np.asarray(values, dtype=float)
        out = np.empty_like(v)
        for cell in self.cells(t):
            w = self.probs[cell]
            out[cell] = np.tensordot(w, v[cell], axes=(0, 0)) / w.sum()
        return out

    def expect(self, values) -> float:
        v = np.asarray(values, dtype=float)
        return float(np.tensordot(self.probs, v, axes=(0, 0)))

    def path_law(self) -> PathLaw:
        return PathLaw(self.probs, self.paths)

    def with_paths(self, paths) -> "FilteredProcess":
        """Same space and filtration, new values (re-validated)."""
        return FilteredProcess(self.probs, paths, self.filtration)


def validate(proc: FilteredProcess) -> ValidationReport:
    """Check every structural invariant and prune zero-probability atoms."""
    probs = np.asarray(proc.probs, dtype=float)
    paths = np.asarray(proc.paths, dtype=float)
    filt = np.asarray(proc.filtration, dtype=np.int64)
    issues = _check(probs, paths, filt)
    if issues:
        return ValidationReport(violations=issues)
    pruned = [int(k) for k in np.flatnonzero(probs <= 0)]
    return ValidationReport(pruned=pruned, process=FilteredProcess(probs, paths, filt))


def plain_process(law: PathLaw) -> FilteredProcess:
    """Process carrying the filtration generated by its own path."""
    return FilteredProcess(law.weights, law.paths)


def full_info_process(law: PathLaw) -> FilteredProcess:
    """Process whose filtration reveals the whole path already at time 1."""
    n = len(law)
    filt = np.tile(np.arange(n), (law.horizon, 1))
    return FilteredProcess(law.weights, law.paths, filt)


def independent_coin_extension(x: FilteredProcess, y: FilteredProcess, reveal_coin_at_1: bool):
    """Glue ``x`` and ``y`` behind a fair coin and prepend a zero step.

    Atoms are ``{0} x Omega^x`` followed by ``{1} x Omega^y``, each with half
    the original weight, and carry the path ``(0, X)`` resp. ``(0, Y)``.
    ``F_1`` is trivial, or reveals the coin when ``reveal_coin_at_1``;
    ``F_t`` for ``t >= 2`` pastes ``F^x_{t-1}`` on the first block with
    ``F^y_{t-1}`` on the second.
    """
    if x.horizon != y.horizon or x.dim != y.dim:
        raise ValueError("coin extension needs processes of equal horizon and dim")
    nx, ny = x.n_atoms, y.n_atoms
    N, d = x.horizon + 1, x.dim
    probs = np.concatenate([x.probs / 2.0, y.probs / 2.0])
    body = np.concatenate([x.paths, y.paths])
    paths = np.concatenate([np.zeros((nx + ny, 1, d)), body], axis=1)
    coin = np.r_[np.zeros(nx, dtype=np.int64), np.ones(ny, dtype=np.int64)]
    rows = [coin if reveal_coin_at_1 else np.zeros(nx + ny, dtype=np.int64)]
    for t in range(1, N):
        shift = int(x.filtration[t - 1].max()) + 1
        rows.append(np.r_[x.filtration[t - 1], y.filtration[t - 1] + shift])
    return FilteredProcess(probs, paths, np.array(rows))
