import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptedot.canonical import NestedAtom, nested_distribution
from adaptedot.corpus import random_process
from adaptedot.demo import geodesic_pair, instructional_pair
from adaptedot.metric import (
    RawCoupling,
    adapted_distance,
    aw_between_laws,
    coupling_cost,
    flatten,
    is_causal,
    nested_distance,
)
from adaptedot.process import FilteredProcess, PathLaw

from oracles import filtration_dp

seeds = st.integers(0, 2**32 - 1)


def test_instructional_pair_value_and_plan():
    X, Y = instructional_pair()
    d, plan = adapted_distance(X, Y, 1.0)
    assert d == 1.0
    M = flatten(plan)
    assert is_causal(M)
    assert coupling_cost(M, 1.0) == 1.0


def test_identity_coupling_is_causal_one_way_only():
    X, Y = instructional_pair()
    M = np.diag([0.5, 0.5])
    assert not is_causal(M, X, Y, "x->y")
    assert is_causal(M, X, Y, "y->x")
    assert not is_causal(M, X, Y)
    with pytest.raises(ValueError):
        is_causal(M, X, Y, "sideways")


def test_product_coupling_is_bicausal():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x, y = random_process(rng, 3, 8), random_process(rng, 3, 8)
        assert is_causal(np.outer(x.probs, y.probs), x, y)


def test_raw_coupling_checks_marginals():
    X, Y = instructional_pair()
    with pytest.raises(ValueError):
        RawCoupling(np.array([[0.5, 0.0], [0.0, 0.4]]), X, Y)
    with pytest.raises(ValueError):
        RawCoupling(np.array([[1.0, -0.5], [-0.5, 1.0]]), X, Y)


@settings(max_examples=80, deadline=None)
@given(seeds, st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_matches_filtration_recursion(seed, p):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 4))
    x, y = random_process(rng, N, 9, d=2), random_process(rng, N, 9, d=2)
    assert abs(adapted_distance(x, y, p)[0] - filtration_dp(x, y, p)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_flattened_plan_is_bicausal_and_optimal(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 5))
    x, y = random_process(rng, N, 10), random_process(rng, N, 10)
    d, plan = adapted_distance(x, y, 2.0)
    M = flatten(plan)
    assert is_causal(M)
    assert abs(coupling_cost(M, 2.0) - d**2) <= 1e-10


def test_thread_count_does_not_change_result():
    rng = np.random.default_rng(4)
    x, y = random_process(rng, 4, 40, values=np.linspace(-2, 2, 9)), random_process(rng, 4, 40)
    d1, p1 = adapted_distance(x, y, 1.0, threads=1)
    d8, p8 = adapted_distance(x, y, 1.0, threads=8)
    assert d1 == d8
    assert all(np.array_equal(p1.kernels[k].matrix, p8.kernels[k].matrix) for k in p1.kernels)


def test_custom_ground_callback():
    a, b = geodesic_pair()

    def sup_norm_sq(A, B):
        return np.max(np.abs(A[:, None, :] - B[None, :, :]), axis=2) ** 2

    assert adapted_distance(a, b, 2.0, ground=sup_norm_sq)[0] == math.sqrt(5)


def test_errors():
    x = FilteredProcess([1.0], [[0.0]])
    with pytest.raises(ValueError):
        adapted_distance(x, FilteredProcess([1.0], [[0.0, 1.0]]))
    with pytest.raises(ValueError):
        adapted_distance(x, FilteredProcess([1.0], [[[0.0, 1.0]]]))
    with pytest.raises(ValueError):
        adapted_distance(x, x, p=0.5)


def test_nested_distance_of_atoms():
    a = NestedAtom(1, [0.0], [(1.0, NestedAtom(2, [1.0]))])
    b = NestedAtom(1, [3.0], [(1.0, NestedAtom(2, [5.0]))])
    assert nested_distance(a, b, 1.0) == 7.0
    assert nested_distance(NestedAtom(2, [1.0]), NestedAtom(2, [4.0]), 2.0) == 3.0


def test_aw_between_laws_and_dirac():
    mu = PathLaw([1.0], [[0.0, 0.0]])
    nu = PathLaw([0.5, 0.5], [[0.0, -1.0], [0.0, 1.0]])
    assert aw_between_laws(mu, nu, 1.0) == 1.0
    X, _ = instructional_pair()
    assert adapted_distance(nested_distribution(X), X, 1.0)[0] == 0.0


def test_reachable_kernels_cover_support():
    X, Y = instructional_pair()
    _, plan = adapted_distance(X, Y, 1.0)
    reach = plan.reachable()
    assert reach[0] == [(0, 0, 0)]
    assert all(key in plan.kernels for lv in reach for key in lv)
