import numpy as np

from adaptedot.analytics import martingale_deviation
from adaptedot.canonical import nested_distribution
from adaptedot.corpus import corpus, random_cost, random_martingale, random_process, redundant_copy
from adaptedot.process import plain_process, validate


def test_generators_valid_and_deterministic():
    a = corpus(seed=7, size=30)
    b = corpus(seed=7, size=30)
    assert len(a) == 30
    for x, y in zip(a, b):
        assert validate(x).ok
        assert np.array_equal(x.paths, y.paths) and np.array_equal(x.filtration, y.filtration)
        assert x.n_atoms <= 12


def test_some_processes_are_not_plain():
    rng = np.random.default_rng(0)
    procs = [random_process(rng, 3, 10) for _ in range(60)]
    coarse = sum(nested_distribution(p) != nested_distribution(plain_process(p.path_law())) for p in procs)
    assert 0 < coarse < 60


def test_martingales_exact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        assert martingale_deviation(random_martingale(rng, 4, 12, d=2)) == 0.0


def test_redundant_copy_grows():
    rng = np.random.default_rng(2)
    x = random_process(rng, 3, 6)
    y = redundant_copy(rng, x, splits=3)
    assert y.n_atoms == x.n_atoms + 3
    assert nested_distribution(y) == nested_distribution(x)


def test_random_cost_lipschitz():
    rng = np.random.default_rng(3)
    c = random_cost(rng, 3, 2, lipschitz=0.5)
    for _ in range(200):
        u, v = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
        gap = np.linalg.norm(u - v, axis=1).sum()
        for fn in c.costs:
            assert abs(fn(u) - fn(v)) <= 0.5 * gap + 1e-12
