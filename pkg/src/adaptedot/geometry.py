"""Geodesics and barycenters in the adapted Wasserstein space."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .approximation import pullback_coupling
from .canonical import canonical_process, nested_distribution
from .metric import adapted_distance, default_threads, flatten
from .process import FilteredProcess, relabel

__all__ = [
    "InterpolationFamily",
    "SpeedReport",
    "interpolate",
    "check_constant_speed",
    "BarycenterProblem",
    "BarycenterResult",
    "barycenter",
    "crr_model",
]


class InterpolationFamily:
    """``u -> Z^u`` along an optimal bicausal coupling between ``x`` and ``y``.

    Atoms are the support pairs of the coupling, values are
    ``(1-u) X + u Y`` and ``F_t`` is the product of the two ``F_t``.
    """

    def __init__(self, x: FilteredProcess, y: FilteredProcess, p: float = 2.0):
        if p <= 1:
            raise ValueError("geodesics need p > 1")
        self.x, self.y, self.p = x, y, p
        self.distance, self.plan = adapted_distance(x, y, p)
        raw = flatten(self.plan)
        self._cx, self._cy = raw.x, raw.y
        rows, cols = np.nonzero(raw.matrix > 0)
        self._rows, self._cols = rows, cols
        self._probs = raw.matrix[rows, cols]
        N = x.horizon
        self._filtration = np.array(
            [relabel(self._cx.cell_ids(t)[rows] * (self._cy.n_atoms + 1) + self._cy.cell_ids(t)[cols])
             for t in range(1, N + 1)]
        )

    def __call__(self, u: float) -> FilteredProcess:
        if not 0.0 <= u <= 1.0:
            raise ValueError("u must lie in [0, 1]")
        vals = (1.0 - u) * self._cx.paths[self._rows] + u * self._cy.paths[self._cols]
        probs = self._probs / math.fsum(self._probs.tolist())
        return FilteredProcess(probs, vals, self._filtration)


def interpolate(x: FilteredProcess, y: FilteredProcess, p: float, u: float) -> FilteredProcess:
    """Interpolation process at ``u`` between ``x`` and ``y`` (requires ``p > 1``)."""
    return InterpolationFamily(x, y, p)(u)


@dataclass
class SpeedReport:
    distance: float
    checked: int
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def check_constant_speed(family: InterpolationFamily, samples: Sequence[float],
                         rel_tol: float = 1e-8) -> SpeedReport:
    """Check ``AW_p(Z^u, Z^v) = |u - v| AW_p(x, y)`` on all sampled pairs."""
    D = family.distance
    tol = rel_tol * (1.0 + D)
    Z = {u: family(u) for u in samples}
    report = SpeedReport(D, 0)
    us = list(samples)
    for a in range(len(us)):
        for b in range(a, len(us)):
            u, v = us[a], us[b]
            got = adapted_distance(Z[u], Z[v], family.p)[0]
            want = abs(u - v) * D
            report.checked += 1
            if abs(got - want) > tol:
                report.violations.append((u, v, got, want))
    return report


@dataclass
class BarycenterProblem:
    """Inputs with convex weights; ``skeleton`` fixes the candidate's tree."""

    inputs: List[FilteredProcess]
    weights: Optional[Sequence[float]] = None
    p: float = 2.0
    skeleton: Optional[FilteredProcess] = None

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("barycenter needs at least one input")
        k = len(self.inputs)
        w = np.full(k, 1.0 / k) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (k,):
            raise ValueError("one weight per input")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        self.weights = w
        N, d = self.inputs[0].horizon, self.inputs[0].dim
        if any(x.horizon != N or x.dim != d for x in self.inputs):
            raise ValueError("inputs must share horizon and dim")
        if self.p < 1:
            raise ValueError("p must be >= 1")


@dataclass
class BarycenterResult:
    process: FilteredProcess
    objective: float
    trace: List[float]

    def __iter__(self):
        return iter((self.process, self.objective, self.trace))


def _objective(Z, problem, threads):
    def one(x):
        return adapted_distance(Z, x, problem.p, threads=1)[1]

    if threads > 1 and len(problem.inputs) > 1:
        with ThreadPoolExecutor(min(threads, len(problem.inputs))) as pool:
            plans = list(pool.map(one, problem.inputs))
    else:
        plans = [one(x) for x in problem.inputs]
    total = math.fsum(float(w) * pl.cost for w, pl in zip(problem.weights, plans))
    return total, plans


def _node_cost(v, pts, mass, p):
    r = np.linalg.norm(pts - v, axis=1)
    return float(np.dot(mass, r**p))


def _update_node(current, pts, mass, p):
    """Minimize ``sum mass |v - pts|^p`` over ``v``; never returns a worse point."""
    if mass.sum() <= 0:
        return current
    if p == 2:
        return (mass[:, None] * pts).sum(axis=0) / mass.sum()
    base = _node_cost(current, pts, mass, p)
    if pts.shape[1] == 1:
        lo, hi = float(pts.min()), float(pts.max())
        if lo == hi:
            cand = np.array([lo])
        else:
            res = minimize_scalar(lambda s: _node_cost(np.array([s]), pts, mass, p),
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
            cand = np.array([res.x])
    else:
        start = (mass[:, None] * pts).sum(axis=0) / mass.sum()
        res = minimize(lambda v: _node_cost(v, pts, mass, p), start, method="L-BFGS-B")
        cand = res.x
    return cand if _node_cost(cand, pts, mass, p) < base else current


def barycenter(problem: BarycenterProblem, init: Optional[FilteredProcess] = None,
               max_iters: int = 100, tol: float = 1e-12, threads: Optional[int] = None) -> BarycenterResult:
    """Fixed-skeleton descent for ``min_Z sum_i lambda_i AW_p^p(Z, X^i)``.

    Each round couples the candidate optimally to every input, pulls the
    couplings back to the candidate's atoms and moves each node to the
    minimizer of its coupled transport cost (the weighted mean for
    ``p = 2``). The trace of objectives is non-increasing.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    if init is not None:
        Z = init
    elif problem.skeleton is not None:
        Z = problem.skeleton
    else:
        Z = canonical_process(nested_distribution(problem.inputs[int(np.argmax(problem.weights))]))
    N, d = Z.horizon, Z.dim
    obj, plans = _objective(Z, problem, threads)
    trace = [obj]
    for _ in range(max_iters):
        raws = [pullback_coupling(pl, Z, x) for pl, x in zip(plans, problem.inputs)]
        paths = Z.paths.copy()
        for t in range(1, N + 1):
            for cell in Z.cells(t):
                pts, mass = [], []
                for lam, raw, x in zip(problem.weights, raws, problem.inputs):
                    m = raw.matrix[cell].sum(axis=0)
                    nz = m > 0
                    pts.append(x.paths[nz, t - 1])
                    mass.append(lam * m[nz])
                pts, mass = np.concatenate(pts), np.concatenate(mass)
                paths[cell, t - 1] = _update_node(paths[cell[0], t - 1], pts, mass, problem.p)
        Z_new = Z.with_paths(paths)
        new_obj, new_plans = _objective(Z_new, problem, threads)
        if new_obj > obj:
            # numerical noise only; keep the previous candidate
            break
        Z, plans = Z_new, new_plans
        trace.append(new_obj)
        if obj - new_obj < tol:
            obj = new_obj
            break
        obj = new_obj
    return BarycenterResult(Z, obj, trace)


def crr_model(steps: int, s0: float, up: float, down: float, p_up: float) -> FilteredProcess:
    """Binomial price tree ``S_0..S_steps`` as a plain process on ``2^steps`` atoms.

    The horizon is ``steps + 1`` because the deterministic start counts as
    the first time.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not (up > down > 0):
        raise ValueError("need up > down > 0")
    if not (0.0 < p_up < 1.0):
        raise ValueError("p_up must lie in (0, 1)")
    n = 2**steps
    probs, paths = [], []
    for k in range(n):
        bits = [(k >> (steps - 1 - s)) & 1 for s in range(steps)]
        s, path, pr = float(s0), [float(s0)], 1.0
        for b in bits:
            s *= up if b else down
            pr *= p_up if b else 1.0 - p_up
            path.append(s)
        probs.append(pr)
        paths.append(path)
    return FilteredProcess(probs, paths)
