import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptedot.corpus import random_process, redundant_copy
from adaptedot.demo import instructional_pair
from adaptedot.logic import (
    Cond,
    Interner,
    absdiff,
    af_from_json,
    clamp,
    const,
    equivalent_rank,
    evaluate,
    expectation,
    lift,
    linear,
    minimum,
    power,
    pp_law,
    prediction_process,
    project_law,
    proj,
    rank_separating_pair,
)
from adaptedot.process import FilteredProcess

seeds = st.integers(0, 2**32 - 1)


def test_primitives():
    x = FilteredProcess([0.5, 0.5], [[1.0, -2.0], [1.0, 3.0]])
    assert evaluate(proj(2), x).tolist() == [-2.0, 3.0]
    assert evaluate(clamp(proj(2), 0, 1), x).tolist() == [0.0, 1.0]
    assert evaluate(absdiff(proj(1), proj(2)), x).tolist() == [3.0, 2.0]
    assert evaluate(power(proj(2), 2), x).tolist() == [4.0, 9.0]
    assert evaluate(minimum(proj(2), const(0.0)), x).tolist() == [-2.0, 0.0]
    assert evaluate(linear([2, 1], [proj(1), proj(2)], 1.0), x).tolist() == [1.0, 6.0]
    assert evaluate(Cond(proj(2), 1), x).tolist() == [0.5, 0.5]
    assert expectation(proj(2), x) == 0.5


def test_rank_and_errors():
    f = Cond(power(Cond(proj(2), 2), 2), 1)
    assert f.rank == 2
    x = FilteredProcess([1.0], [[0.0]])
    with pytest.raises(ValueError):
        evaluate(Cond(proj(1), 3), x)
    with pytest.raises(ValueError):
        proj(0)
    with pytest.raises(ValueError):
        linear([1, 2], [proj(1)])


def test_json_language():
    desc = {"op": "cond", "t": 1, "arg": {"op": "pow", "e": 2,
            "arg": {"op": "clamp", "lo": 0, "hi": 1, "arg": {"op": "proj", "t": 2}}}}
    f = af_from_json(desc)
    x, y, _ = rank_separating_pair(2)
    assert expectation(f, x) == 0.5 and expectation(f, y) == 0.5
    g = af_from_json({"op": "min", "args": [1, {"op": "linear", "coeffs": [1, -1],
                      "args": [{"op": "proj", "t": 2}, {"op": "absdiff", "args": [{"op": "proj", "t": 1}, 0.5]}]}]})
    assert evaluate(g, x).tolist() == [-0.5, 0.5]
    with pytest.raises(ValueError):
        af_from_json({"op": "sqrt", "arg": 1})
    with pytest.raises(ValueError):
        af_from_json({"op": "proj"})


def test_witness_separates_base_pair():
    x, y, f = rank_separating_pair(2)
    assert expectation(f, x) == 0.25
    assert expectation(f, y) == 0.5


def test_lift_shifts_time():
    x = FilteredProcess([1.0], [[7.0, 1.0, 2.0]])
    assert evaluate(lift(proj(2)), x).tolist() == [2.0]
    assert lift(Cond(proj(2), 1)).t == 2


def test_instructional_pair_ranks():
    X, Y = instructional_pair()
    assert equivalent_rank(X, Y, 0)
    assert not equivalent_rank(X, Y, 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_redundant_copy_same_prediction_laws(seed):
    rng = np.random.default_rng(seed)
    x = random_process(rng, int(rng.integers(1, 5)), 8)
    y = redundant_copy(rng, x)
    for n in range(x.horizon):
        assert equivalent_rank(x, y, n)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_rank_equivalence_is_monotone(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 5))
    x, y = random_process(rng, N, 8, values=(0.0, 1.0)), random_process(rng, N, 8, values=(0.0, 1.0))
    eq = [equivalent_rank(x, y, n) for n in range(N)]
    assert all(a or not b for a, b in zip(eq, eq[1:]))


def test_prediction_tables_and_projection():
    x, _, _ = rank_separating_pair(3)
    I = Interner()
    tables = prediction_process(x, 2, I, _all=True)
    assert [t.order for t in tables] == [0, 1, 2]
    law2 = tables[2].law()
    assert project_law(law2, I, 2) == pp_law(x, 0, I)
    assert abs(sum(law2.values()) - 1.0) <= 1e-15
    with pytest.raises(ValueError):
        I.project(tables[0].ids[0])
    assert isinstance(tables[1].state(0), tuple)
    with pytest.raises(ValueError):
        prediction_process(x, -1)
