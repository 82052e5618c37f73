"""Worked examples with their expected values, as a PASS/FAIL table."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .analytics import coin_gap_cost, rank_separating_cost, snell
from .canonical import NestedAtom, NestedDistribution, nested_distribution
from .geometry import BarycenterProblem, InterpolationFamily, barycenter, check_constant_speed, crr_model
from .logic import equivalent_rank, expectation, rank_separating_pair
from .metric import adapted_distance, flatten
from .process import PathLaw, full_info_process, plain_process

__all__ = ["Check", "instructional_pair", "geodesic_pair", "run_checks"]


@dataclass
class Check:
    name: str
    expected: str
    got: str
    passed: bool


def instructional_pair():
    """Same path law ``(0, +-1)``: one process learns the sign at time 2, the other at time 1."""
    law = PathLaw([0.5, 0.5], [[0.0, -1.0], [0.0, 1.0]])
    return plain_process(law), full_info_process(law)


def geodesic_pair():
    """Plain pair whose midpoint interpolant is not plain."""
    x = plain_process(PathLaw([0.5, 0.5], [[1.0, -2.0], [-1.0, 2.0]]))
    y = plain_process(PathLaw([0.5, 0.5], [[1.0, 1.0], [-1.0, -1.0]]))
    return x, y


def _close(a, b, tol):
    return abs(a - b) <= tol


def run_checks(barycenter_steps: int = 4) -> List[Check]:
    out: List[Check] = []

    def add(name, expected, got, ok):
        out.append(Check(name, str(expected), str(got), bool(ok)))

    x, y, f = rank_separating_pair(2)
    c = coin_gap_cost()
    vx, vy = snell(x, c).value, snell(y, c).value
    add("coin pair stopping value, coarse filtration", 0.5, vx, _close(vx, 0.5, 1e-12))
    add("coin pair stopping value, fine filtration", 0.25, vy, _close(vy, 0.25, 1e-12))
    gap = abs(expectation(f, x) - expectation(f, y))
    add("coin pair witness gap", 0.25, gap, gap == 0.25)
    d1 = adapted_distance(x, y, 1)[0]
    add("coin pair AW_1 dominates stopping gap", ">= 0.25", d1, d1 >= abs(vx - vy) - 1e-12)

    for N in (2, 3, 4):
        x, y, f = rank_separating_pair(N)
        lo, hi = equivalent_rank(x, y, N - 2), equivalent_rank(x, y, N - 1)
        add(f"rank pair N={N}: equal up to rank N-2, differ at N-1", "True/False", f"{lo}/{hi}", lo and not hi)
        xs, ys, cs = rank_separating_cost(N)
        sx, sy = snell(xs, cs).value, snell(ys, cs).value
        add(f"rank pair N={N}: stopping values differ", "v(X) > v(Y)", f"{sx:.17g} > {sy:.17g}", sx > sy)

    X, Y = instructional_pair()
    d = adapted_distance(X, Y, 1)[0]
    add("instructional pair AW_1", 1.0, d, _close(d, 1.0, 1e-12))
    same = nested_distribution(X) == nested_distribution(Y)
    add("instructional pair nested forms differ", "differ", "equal" if same else "differ", not same)

    a, b = geodesic_pair()
    fam = InterpolationFamily(a, b, 2.0)
    add("plain-not-geodesic AW_2", math.sqrt(5), fam.distance, _close(fam.distance, math.sqrt(5), 1e-10))
    M = flatten(fam.plan)
    pairs = sorted((tuple(M.x.paths[i, :, 0].tolist()), tuple(M.y.paths[j, :, 0].tolist()))
                   for i, j in zip(*np.nonzero(M.matrix)))
    want = sorted([((1.0, -2.0), (-1.0, -1.0)), ((-1.0, 2.0), (1.0, 1.0))])
    add("plain-not-geodesic coupling pairs", want, pairs, pairs == want)
    mid = nested_distribution(fam(0.5))
    target = NestedDistribution([
        (0.5, NestedAtom(1, [0.0], [(1.0, NestedAtom(2, [1.5]))])),
        (0.5, NestedAtom(1, [0.0], [(1.0, NestedAtom(2, [-1.5]))])),
    ])
    add("plain-not-geodesic midpoint nested form", target, mid, mid == target)
    plain_mid = nested_distribution(plain_process(fam(0.5).path_law()))
    add("plain-not-geodesic midpoint is not plain", "differs", plain_mid, plain_mid != mid)
    rep = check_constant_speed(fam, [0.0, 0.25, 0.5, 0.75, 1.0])
    add("plain-not-geodesic constant speed", "no violations", len(rep.violations), rep.ok)

    models = [
        crr_model(barycenter_steps, 1.0, 1.1, 0.9, 0.5),
        crr_model(barycenter_steps, 1.0, 1.2, 0.85, 0.4),
        crr_model(barycenter_steps, 1.0, 1.05, 0.95, 0.6),
    ]
    prob = BarycenterProblem(models)
    res = barycenter(prob)
    mono = all(b <= a + 1e-10 for a, b in zip(res.trace, res.trace[1:]))
    best = min(
        math.fsum(w * adapted_distance(m, o, 2.0)[0] ** 2 for w, o in zip(prob.weights, models))
        for m in models
    )
    add("binomial barycenter trace non-increasing", "True", mono, mono)
    add("binomial barycenter beats every input", f"<= {best:.17g}", res.objective, res.objective <= best + 1e-12)
    return out
