"""Compiled vs pure-Python transport simplex.

Times ``solve_ot`` on random square problems and a full ``adapted_distance``
call, once per backend, and checks that both return the same plan.

    python3 benchmarks/bench_ot.py [--sizes 8,16,32,64] [--repeat 5]
"""

import argparse
import time

import numpy as np

from adaptedot import ot
from adaptedot.corpus import random_process
from adaptedot.geometry import crr_model
from adaptedot.metric import adapted_distance


def _problem(rng, n):
    a = rng.integers(1, 9, size=n).astype(float)
    b = rng.integers(1, 9, size=n).astype(float)
    return a / a.sum(), b / b.sum(), rng.random((n, n))


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="8,16,32,64")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = ["python"]
    try:
        ot.set_backend("compiled")
        backends.insert(0, "compiled")
    except ImportError:
        print("compiled kernel not built; timing the pure backend only")

    rng = np.random.default_rng(args.seed)
    cases = [(f"solve_ot n={n}", _problem(rng, n)) for n in map(int, args.sizes.split(","))]
    x, y = crr_model(6, 1.0, 1.1, 0.9, 0.5), crr_model(6, 1.0, 1.2, 0.85, 0.4)
    u, v = random_process(rng, 4, 12), random_process(rng, 4, 12)

    print(f"{'case':<28}" + "".join(f"{b:>14}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    rows = [(name, lambda a=a, b=b, C=C: ot.solve_ot(a, b, C).matrix) for name, (a, b, C) in cases]
    rows.append(("AW_2 binomial, 64 atoms", lambda: adapted_distance(x, y, 2.0, threads=1)[0]))
    rows.append(("AW_1 random, N=4", lambda: adapted_distance(u, v, 1.0, threads=1)[0]))
    for name, fn in rows:
        times, outs = [], []
        for b in backends:
            ot.set_backend(b)
            t, out = _best_of(fn, args.repeat)
            times.append(t)
            outs.append(out)
        same = all(np.array_equal(outs[0], o) for o in outs[1:])
        line = f"{name:<28}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[1] / times[0]:>11.1f}x" + ("" if same else "  MISMATCH")
        print(line)
    ot.set_backend(backends[0])


if __name__ == "__main__":
    main()
