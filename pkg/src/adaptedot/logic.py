"""Adapted functions, prediction processes and rank separation.

Adapted functions are small expression trees: path functionals at the
leaves, pointwise composition, and conditioning on ``F_t``. Conditioning
is what sees the filtration, and the nesting depth of conditioning is the
rank.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .process import FilteredProcess, independent_coin_extension

__all__ = [
    "AdaptedFunction",
    "Base",
    "Compose",
    "Cond",
    "evaluate",
    "expectation",
    "proj",
    "const",
    "clamp",
    "absdiff",
    "power",
    "minimum",
    "linear",
    "lift",
    "af_from_json",
    "Interner",
    "PredictionTable",
    "prediction_process",
    "pp_law",
    "project_law",
    "equivalent_rank",
    "rank_separating_pair",
]


class AdaptedFunction:
    rank: int = 0

    def __repr__(self):
        return f"{type(self).__name__}(rank={self.rank})"


class Base(AdaptedFunction):
    """Leaf ``path -> float``; ``fn`` receives the ``(N, d)`` path array."""

    def __init__(self, fn: Callable[[np.ndarray], float], name: str = "base"):
        self.fn = fn
        self.name = name
        self.rank = 0

    def __repr__(self):
        return f"Base({self.name})"


class Compose(AdaptedFunction):
    """``fn(child_1, .., child_m)`` applied pointwise."""

    def __init__(self, fn: Callable[..., float], children: Sequence[AdaptedFunction], name="compose"):
        if not children:
            raise ValueError("Compose needs at least one child")
        self.fn = fn
        self.children = list(children)
        self.name = name
        self.rank = max(c.rank for c in self.children)

    def __repr__(self):
        return f"{self.name}({', '.join(map(repr, self.children))})"


class Cond(AdaptedFunction):
    """Conditional expectation of ``g`` given ``F_t``; rank goes up by one."""

    def __init__(self, g: AdaptedFunction, t: int):
        if t < 0:
            raise ValueError("conditioning time must be >= 0")
        self.g = g
        self.t = int(t)
        self.rank = g.rank + 1

    def __repr__(self):
        return f"({self.g!r}|{self.t})"


def evaluate(f: AdaptedFunction, proc: FilteredProcess) -> np.ndarray:
    """Per-atom value of ``f`` on ``proc``."""
    if isinstance(f, Base):
        return np.array([float(f.fn(proc.paths[k])) for k in range(proc.n_atoms)])
    if isinstance(f, Compose):
        vals = [evaluate(c, proc) for c in f.children]
        return np.array([float(f.fn(*(v[k] for v in vals))) for k in range(proc.n_atoms)])
    if isinstance(f, Cond):
        if f.t > proc.horizon:
            raise ValueError(f"conditioning time {f.t} exceeds the horizon {proc.horizon}")
        inner = evaluate(f.g, proc)
        assert f.rank == f.g.rank + 1
        return proc.cond_expect(inner, f.t)
    raise TypeError(f"not an adapted function: {f!r}")


def expectation(f: AdaptedFunction, proc: FilteredProcess) -> float:
    v = evaluate(f, proc)
    return math.fsum((proc.probs * v).tolist())


# -- primitives ---------------------------------------------------------

def proj(t: int, k: int = 0) -> Base:
    """Coordinate ``k`` of ``x_t`` (times are 1-based)."""
    if t < 1:
        raise ValueError("projection time must be >= 1")
    return Base(lambda x: x[t - 1, k], name=f"x{t}" if k == 0 else f"x{t}[{k}]")


def const(c: float) -> Base:
    c = float(c)
    return Base(lambda x: c, name=repr(c))


def clamp(f: AdaptedFunction, lo: float = 0.0, hi: float = 1.0) -> Compose:
    return Compose(lambda v: min(max(v, lo), hi), [f], name=f"clamp[{lo},{hi}]")


def absdiff(f: AdaptedFunction, g: AdaptedFunction) -> Compose:
    return Compose(lambda a, b: abs(a - b), [f, g], name="absdiff")


def power(f: AdaptedFunction, e: float) -> Compose:
    return Compose(lambda v: v**e, [f], name=f"pow{e:g}")


def minimum(*fs: AdaptedFunction) -> Compose:
    return Compose(lambda *v: min(v), list(fs), name="min")


def linear(coeffs: Sequence[float], fs: Sequence[AdaptedFunction], c0: float = 0.0) -> Compose:
    coeffs = [float(a) for a in coeffs]
    if len(coeffs) != len(fs):
        raise ValueError("one coefficient per argument")
    return Compose(lambda *v: c0 + math.fsum(a * b for a, b in zip(coeffs, v)), list(fs), name="linear")


def lift(f: AdaptedFunction) -> AdaptedFunction:
    """Re-express ``f`` after a leading time step has been prepended."""
    if isinstance(f, Base):
        fn = f.fn
        return Base(lambda x: fn(x[1:]), name=f"{f.name}>>1")
    if isinstance(f, Compose):
        return Compose(f.fn, [lift(c) for c in f.children], name=f.name)
    if isinstance(f, Cond):
        return Cond(lift(f.g), f.t + 1)
    raise TypeError(f"not an adapted function: {f!r}")


def af_from_json(obj) -> AdaptedFunction:
    """Build an adapted function from its JSON description.

    Nodes are objects with an ``op`` field: ``proj`` (``t``, optional
    ``k``), ``const`` (``c``), ``clamp`` (``lo``, ``hi``, ``arg``),
    ``absdiff`` (``args``), ``pow`` (``e``, ``arg``), ``min`` (``args``),
    ``linear`` (``coeffs``, ``args``, optional ``const``) and ``cond``
    (``t``, ``arg``). A bare number is a constant.
    """
    if isinstance(obj, (int, float)):
        return const(obj)
    try:
        op = obj["op"]
        if op == "proj":
            return proj(int(obj["t"]), int(obj.get("k", 0)))
        if op == "const":
            return const(obj["c"])
        if op == "clamp":
            return clamp(af_from_json(obj["arg"]), float(obj.get("lo", 0.0)), float(obj.get("hi", 1.0)))
        if op == "absdiff":
            a, b = obj["args"]
            return absdiff(af_from_json(a), af_from_json(b))
        if op == "pow":
            return power(af_from_json(obj["arg"]), float(obj["e"]))
        if op == "min":
            return minimum(*[af_from_json(a) for a in obj["args"]])
        if op == "linear":
            return linear(obj["coeffs"], [af_from_json(a) for a in obj["args"]], float(obj.get("const", 0.0)))
        if op == "cond":
            return Cond(af_from_json(obj["arg"]), int(obj["t"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed adapted-function node {obj!r}") from exc
    raise ValueError(f"unknown adapted-function op {op!r}")


# -- prediction processes -----------------------------------------------

class Interner:
    """Maps canonical prediction states to small integer ids.

    Order 0 keys are paths; order ``n`` keys hold, for each time slot, the
    sorted ``(child id, weight)`` pairs of a finite law over order ``n-1``
    states. Processes compared with each other must share one interner.
    """

    def __init__(self):
        self.ids: Dict[tuple, int] = {}
        self.keys: List[tuple] = []

    def __call__(self, key: tuple) -> int:
        i = self.ids.get(key)
        if i is None:
            i = self.ids[key] = len(self.keys)
            self.keys.append(key)
        return i

    def order(self, i: int) -> int:
        return self.keys[i][0]

    def decode(self, i: int):
        """Nested tuple form: a path for order 0, else per-slot ``((w, state), ..)``."""
        key = self.keys[i]
        if key[0] == 0:
            return np.array(key[1])
        return tuple(tuple((w, self.decode(c)) for c, w in slot) for slot in key[1])

    def project(self, i: int) -> int:
        """Order ``n-1`` state carried by the terminal slot of an order ``n`` state."""
        key = self.keys[i]
        if key[0] == 0:
            raise ValueError("order-0 states have no projection")
        ((c, _),) = key[1][-1]
        return c


class PredictionTable:
    """``ids[k]`` is the interned ``pp^n`` state of atom ``k``."""

    def __init__(self, order: int, ids: np.ndarray, probs: np.ndarray, interner: Interner):
        self.order = order
        self.ids = ids
        self.probs = probs
        self.interner = interner

    def law(self) -> Dict[int, float]:
        acc = defaultdict(list)
        for i, w in zip(self.ids.tolist(), self.probs.tolist()):
            acc[i].append(w)
        return {i: math.fsum(ws) for i, ws in sorted(acc.items())}

    def state(self, k: int):
        return self.interner.decode(int(self.ids[k]))


def prediction_process(proc: FilteredProcess, n: int, interner: Optional[Interner] = None,
                       _all: bool = False):
    """Order-``n`` prediction process of ``proc``.

    Slot ``t`` of ``pp^n`` is the conditional law of ``pp^{n-1}`` given
    ``F_t``; slot ``N`` is therefore the point mass at ``pp^{n-1}``.
    """
    if n < 0:
        raise ValueError("order must be >= 0")
    I = interner or Interner()
    N = proc.horizon
    ids = np.array([I((0, tuple(map(tuple, proc.paths[k].tolist())))) for k in range(proc.n_atoms)])
    tables = [PredictionTable(0, ids, proc.probs, I)]
    for order in range(1, n + 1):
        prev = tables[-1].ids
        slots = []
        for t in range(1, N + 1):
            row = np.empty(proc.n_atoms, dtype=object)
            for cell in proc.cells(t):
                acc = defaultdict(list)
                for k in cell:
                    acc[int(prev[k])].append(float(proc.probs[k]))
                mass = math.fsum(proc.probs[cell].tolist())
                law = tuple(sorted((c, math.fsum(ws) / mass) for c, ws in acc.items()))
                for k in cell:
                    row[k] = law
            slots.append(row)
        new = np.array([I((order, tuple(s[k] for s in slots))) for k in range(proc.n_atoms)])
        tables.append(PredictionTable(order, new, proc.probs, I))
    return tables if _all else tables[-1]


def pp_law(proc: FilteredProcess, n: int, interner: Interner) -> Dict[int, float]:
    return prediction_process(proc, n, interner).law()


def project_law(law: Dict[int, float], interner: Interner, steps: int = 1) -> Dict[int, float]:
    """Push a law of order-``n`` states down to order ``n - steps``."""
    for _ in range(steps):
        acc = defaultdict(list)
        for i, w in law.items():
            acc[interner.project(i)].append(w)
        law = {i: math.fsum(ws) for i, ws in sorted(acc.items())}
    return law


def equivalent_rank(x: FilteredProcess, y: FilteredProcess, n: int, tol: float = 0.0) -> bool:
    """True when ``x`` and ``y`` have the same law of ``pp^n``.

    ``tol`` loosens only the weight comparison; states must match exactly.
    """
    if x.horizon != y.horizon or x.dim != y.dim:
        raise ValueError("horizon/dim mismatch")
    I = Interner()
    a, b = pp_law(x, n, I), pp_law(y, n, I)
    if a.keys() != b.keys():
        return False
    return all(abs(a[i] - b[i]) <= tol for i in a)


# -- rank separation ----------------------------------------------------

def _square_capped(v):
    return min(v * v, 1.0)


def rank_separating_pair(N: int):
    """Two processes with equal ``pp^{N-2}`` laws but different ``pp^{N-1}`` laws.

    Returns ``(x, y, witness)`` where the rank ``N-1`` witness has
    different expectations under ``x`` and ``y``. Built from the two-step
    coin pair by repeated independent coin extension.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    paths = [[[0.0], [0.0]], [[0.0], [1.0]]]
    x = FilteredProcess([0.5, 0.5], paths, [[0, 0], [0, 1]])
    y = FilteredProcess([0.5, 0.5], paths, [[0, 1], [0, 1]])
    g: AdaptedFunction = clamp(proj(2), 0.0, 1.0)
    f = Compose(_square_capped, [Cond(g, 1)], name="sq^1")
    for _ in range(N - 2):
        x, y = independent_coin_extension(x, y, False), independent_coin_extension(x, y, True)
        f = Compose(_square_capped, [Cond(lift(f), 1)], name="sq^1")
    return x, y, f
