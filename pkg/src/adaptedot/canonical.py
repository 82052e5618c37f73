"""Nested distributions: the canonical invariant of a filtered process.

A time-``t`` nested atom is a value in ``R^d`` together with a finite law
over time-``t+1`` atoms. Children are kept merged and sorted, so two atoms
describe the same element exactly when their sort keys coincide.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .process import FilteredProcess, PathLaw

__all__ = [
    "NestedAtom",
    "NestedDistribution",
    "information_process",
    "nested_distribution",
    "nested_equal",
    "unfold",
    "canonical_process",
    "levels",
    "to_json",
    "from_json",
]


class NestedAtom:
    """Immutable node ``(value, child law)`` of a nested distribution.

    ``children`` is a tuple of ``(weight, NestedAtom)`` pairs, merged and
    sorted by the canonical order; empty at the terminal time.
    """

    __slots__ = ("time", "value", "children", "key", "_hash")

    def __init__(self, time: int, value, children=(), canonical=False):
        self.time = int(time)
        self.value = tuple(float(v) for v in value)
        if not canonical:
            children = _merge(children)
        self.children = tuple(children)
        self.key = (
            self.value,
            tuple(c.key for _, c in self.children),
            tuple(w for w, _ in self.children),
        )
        self._hash = hash(self.key)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, NestedAtom):
            return NotImplemented
        return self is other or (self._hash == other._hash and self.key == other.key)

    def __lt__(self, other):
        return self.key < other.key

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.children])

    @property
    def depth(self) -> int:
        """Number of levels below this node."""
        node, k = self, 0
        while node.children:
            node = node.children[0][1]
            k += 1
        return k

    def __repr__(self):
        v = self.value[0] if len(self.value) == 1 else self.value
        if not self.children:
            return f"<{v}>"
        kids = ", ".join(f"{w:g}:{c!r}" for w, c in self.children)
        return f"<{v}; {{{kids}}}>"


class NestedDistribution(NestedAtom):
    """Law of ``ip_1``: a root with no value whose children are time-1 atoms."""

    __slots__ = ("horizon", "dim")

    def __init__(self, children, canonical=False):
        super().__init__(0, (), children, canonical=canonical)
        if not self.children:
            raise ValueError("a nested distribution needs at least one atom")
        self.horizon = self.depth
        self.dim = len(self.children[0][1].value)

    def __repr__(self):
        kids = ", ".join(f"{w:g}:{c!r}" for w, c in self.children)
        return f"Nested{{{kids}}}"


def _merge(children) -> List[Tuple[float, NestedAtom]]:
    acc: Dict[NestedAtom, List[float]] = defaultdict(list)
    first = {}
    for w, c in children:
        w = float(w)
        if w < 0:
            raise ValueError("negative child weight")
        if w == 0:
            continue
        c = first.setdefault(c, c)
        acc[c].append(w)
    return sorted(((math.fsum(ws), c) for c, ws in acc.items()), key=lambda wc: wc[1].key)


def information_process(proc: FilteredProcess) -> List[List[NestedAtom]]:
    """Per-time, per-atom table of ``ip_t``; ``table[t-1][k]`` is ``ip_t(k)``.

    The backward recursion groups each ``F_t`` cell by its ``F_{t+1}``
    subcells; the conditional subcell probabilities weight the children.
    """
    N = proc.horizon
    n = proc.n_atoms
    table: List[List[NestedAtom]] = [[None] * n for _ in range(N)]  # type: ignore
    for k in range(n):
        table[N - 1][k] = NestedAtom(N, proc.paths[k, N - 1])
    for t in range(N - 1, 0, -1):
        nxt = proc.cell_ids(t + 1)
        for cell in proc.cells(t):
            node = _node(proc, cell, nxt, table[t], t, proc.paths[cell[0], t - 1])
            for k in cell:
                table[t - 1][k] = node
    return table


def _node(proc, cell, sub_ids, child_row, t, value):
    groups: Dict[int, List[int]] = defaultdict(list)
    for k in cell:
        groups[int(sub_ids[k])].append(int(k))
    mass = math.fsum(proc.probs[cell].tolist())
    kids = []
    for members in groups.values():
        w = math.fsum(proc.probs[members].tolist()) / mass
        kids.append((w, child_row[members[0]]))
    if t == 0:
        return NestedDistribution(kids)
    return NestedAtom(t, value, kids)


def nested_distribution(proc: FilteredProcess) -> NestedDistribution:
    """Canonical nested form ``L(ip_1)`` of ``proc``."""
    ip = information_process(proc)
    every = np.arange(proc.n_atoms)
    return _node(proc, every, proc.cell_ids(1), ip[0], 0, ())


def levels(nd: NestedAtom) -> List[List[NestedAtom]]:
    """Distinct atoms per level below (and including) ``nd``, sorted."""
    out = [[nd]]
    while out[-1][0].children:
        seen = {}
        for a in out[-1]:
            for _, c in a.children:
                seen.setdefault(c, c)
        out.append(sorted(seen))
    return out


def nested_equal(a: NestedAtom, b: NestedAtom, tol: float = 0.0, p: float = 1.0) -> bool:
    """Equality of nested atoms or distributions.

    ``tol = 0`` compares canonical forms exactly. For ``tol > 0`` the
    answer is ``nested distance <= tol`` (computed with exponent ``p``),
    which stays transitive up to the triangle inequality.
    """
    if a.depth != b.depth:
        raise ValueError("nested objects have different horizons")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if tol == 0:
        return a == b
    from .metric import nested_distance

    return nested_distance(a, b, p) <= tol


def _chains(nd: NestedAtom):
    """Root-to-leaf chains in depth-first order as lists of (weight, atom)."""
    out = []

    def walk(node, prefix):
        if not node.children:
            out.append(prefix)
            return
        for w, c in node.children:
            walk(c, prefix + [(w, c)])

    walk(nd, [])
    return out


def unfold(nd: NestedDistribution) -> PathLaw:
    """Path law obtained by chaining the child laws."""
    chains = _chains(nd)
    weights = [math.prod(w for w, _ in ch) for ch in chains]
    paths = [[a.value for _, a in ch] for ch in chains]
    return PathLaw(weights, paths, tol=1e-9)


def canonical_process(nd: NestedDistribution) -> FilteredProcess:
    """Tree-structured process whose ``F_t`` cells are shared chain prefixes."""
    chains = _chains(nd)
    N = len(chains[0])
    probs = np.array([math.prod(w for w, _ in ch) for ch in chains])
    paths = np.array([[a.value for _, a in ch] for ch in chains])
    # a prefix is identified by the sequence of child positions taken
    pos = []
    for ch in chains:
        node, idx = nd, []
        for _, a in ch:
            idx.append(next(i for i, (_, c) in enumerate(node.children) if c is a))
            node = a
        pos.append(idx)
    filt = []
    for t in range(1, N + 1):
        seen = {}
        filt.append([seen.setdefault(tuple(ix[:t]), len(seen)) for ix in pos])
    return FilteredProcess(probs, paths, np.array(filt))


def to_json(nd: NestedAtom) -> dict:
    def enc(w, a):
        d = {"w": w, "v": list(a.value)}
        if a.children:
            d["children"] = [enc(cw, c) for cw, c in a.children]
        return d

    return {"atoms": [enc(w, a) for w, a in nd.children]}


def from_json(obj: dict) -> NestedDistribution:
    def dec(d, t):
        kids = [(c["w"], dec(c, t + 1)) for c in d.get("children", [])]
        return NestedAtom(t, d["v"], kids)

    return NestedDistribution([(a["w"], dec(a, 1)) for a in obj["atoms"]])


def chain_index(nd: NestedDistribution) -> Sequence:
    """Chains of ``nd`` in the atom order used by :func:`canonical_process`."""
    return _chains(nd)
