import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptedot.canonical import (
    NestedAtom,
    NestedDistribution,
    canonical_process,
    from_json,
    information_process,
    levels,
    nested_distribution,
    nested_equal,
    to_json,
    unfold,
)
from adaptedot.corpus import random_process, redundant_copy
from adaptedot.demo import instructional_pair
from adaptedot.metric import adapted_distance
from adaptedot.process import FilteredProcess, PathLaw

seeds = st.integers(0, 2**32 - 1)


def test_instructional_pair_forms():
    X, Y = instructional_pair()
    nx, ny = nested_distribution(X), nested_distribution(Y)
    want_x = NestedDistribution([(1.0, NestedAtom(1, [0.0], [(0.5, NestedAtom(2, [-1.0])), (0.5, NestedAtom(2, [1.0]))]))])
    want_y = NestedDistribution([
        (0.5, NestedAtom(1, [0.0], [(1.0, NestedAtom(2, [-1.0]))])),
        (0.5, NestedAtom(1, [0.0], [(1.0, NestedAtom(2, [1.0]))])),
    ])
    assert nx == want_x and ny == want_y
    assert unfold(nx) == unfold(ny)


def test_merge_of_equal_children():
    nd = NestedDistribution([(0.25, NestedAtom(1, [1.0])), (0.75, NestedAtom(1, [1.0]))])
    assert len(nd.children) == 1 and nd.children[0][0] == 1.0
    assert hash(nd) == hash(NestedDistribution([(1.0, NestedAtom(1, [1.0]))]))


def test_information_process_table():
    X, _ = instructional_pair()
    ip = information_process(X)
    assert ip[0][0] is ip[0][1]
    assert ip[1][0] != ip[1][1]


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_redundant_copy_same_form(seed):
    rng = np.random.default_rng(seed)
    x = random_process(rng, int(rng.integers(1, 4)), 8)
    assert nested_distribution(redundant_copy(rng, x)) == nested_distribution(x)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_canonical_roundtrip(seed):
    rng = np.random.default_rng(seed)
    x = random_process(rng, int(rng.integers(1, 5)), 10)
    nd = nested_distribution(x)
    c = canonical_process(nd)
    assert nested_distribution(c) == nd
    assert unfold(nd) == x.path_law()
    assert from_json(json.loads(json.dumps(to_json(nd)))) == nd


def test_permuting_atoms_changes_nothing():
    rng = np.random.default_rng(3)
    x = random_process(rng, 3, 10)
    perm = rng.permutation(x.n_atoms)
    y = FilteredProcess(x.probs[perm], x.paths[perm], x.filtration[:, perm])
    assert nested_distribution(y) == nested_distribution(x)


def test_levels_sorted_and_distinct():
    X, _ = instructional_pair()
    L = levels(nested_distribution(X))
    assert [len(lv) for lv in L] == [1, 1, 2]
    assert L[2] == sorted(L[2])


def test_nested_equal_with_tolerance():
    a = nested_distribution(FilteredProcess([1.0], [[0.0]]))
    b = nested_distribution(FilteredProcess([1.0], [[1e-9]]))
    assert not nested_equal(a, b)
    assert nested_equal(a, b, tol=1e-8)
    with pytest.raises(ValueError):
        nested_equal(a, nested_distribution(FilteredProcess([1.0], [[0.0, 0.0]])))
    with pytest.raises(ValueError):
        nested_equal(a, b, tol=-1)


def test_canonical_process_of_json_input_distance_zero():
    rng = np.random.default_rng(9)
    x = random_process(rng, 3, 10)
    back = canonical_process(from_json(to_json(nested_distribution(x))))
    assert adapted_distance(x, back, 2.0)[0] == 0.0
    assert unfold(nested_distribution(back)) == PathLaw(x.probs, x.paths)
