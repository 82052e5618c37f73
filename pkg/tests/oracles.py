"""Reference computations that share no code with the package.

* ``ot_vertices``: exact OT by enumerating basic feasible solutions.
* ``ot_linprog``: exact OT via scipy's HiGHS.
* ``filtration_dp``: AW_p by recursion over filtration cells of the raw
  processes (no canonical forms, no merging), each step an LP.
* ``bicausal_lp``: AW_p^p as one LP over couplings of F_N cells with
  explicit causality constraints, solved by vertex enumeration.
"""

import itertools
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog


def ot_linprog(a, b, C):
    a, b, C = np.asarray(a, float), np.asarray(b, float), np.asarray(C, float)
    n, m = C.shape
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    res = linprog(C.ravel(), A_eq=A, b_eq=np.r_[a, b], bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def _vertex_min(c, A, b, tol=1e-11):
    """min c.x s.t. Ax = b, x >= 0 by brute force over column subsets."""
    c, A, b = np.asarray(c, float), np.asarray(A, float), np.asarray(b, float)
    r = np.linalg.matrix_rank(A)
    best = np.inf
    nvar = A.shape[1]
    for size in range(1, r + 1):
        for S in itertools.combinations(range(nvar), size):
            sub = A[:, S]
            if np.linalg.matrix_rank(sub) < size:
                continue
            xs, *_ = np.linalg.lstsq(sub, b, rcond=None)
            if np.max(np.abs(sub @ xs - b)) > tol or np.min(xs) < -tol:
                continue
            best = min(best, float(c[list(S)] @ xs))
    return best


def ot_vertices(a, b, C):
    a, b, C = np.asarray(a, float), np.asarray(b, float), np.asarray(C, float)
    n, m = C.shape
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return _vertex_min(C.ravel(), A, np.r_[a, b])


def _cells(filtration_row, members):
    out = {}
    for k in members:
        out.setdefault(int(filtration_row[k]), []).append(k)
    return [tuple(v) for v in out.values()]


def filtration_dp(x, y, p):
    """``AW_p`` from ``V_t(A, B) = min_pi E_pi[|X_{t+1}-Y_{t+1}|^p + V_{t+1}]``."""
    N = x.horizon
    px, py = np.asarray(x.probs), np.asarray(y.probs)

    @lru_cache(maxsize=None)
    def V(t, A, B):
        if t == N:
            return 0.0
        ka = _cells(x.filtration[t], A)
        kb = _cells(y.filtration[t], B)
        wa = np.array([px[list(c)].sum() for c in ka]) / px[list(A)].sum()
        wb = np.array([py[list(c)].sum() for c in kb]) / py[list(B)].sum()
        C = np.empty((len(ka), len(kb)))
        for i, ca in enumerate(ka):
            for j, cb in enumerate(kb):
                d = np.linalg.norm(x.paths[ca[0], t] - y.paths[cb[0], t]) ** p
                C[i, j] = d + V(t + 1, ca, cb)
        if len(ka) == 1 or len(kb) == 1:
            return float(wa @ C @ wb)
        return ot_linprog(wa, wb, C)

    total = V(0, tuple(range(x.n_atoms)), tuple(range(y.n_atoms)))
    return max(total, 0.0) ** (1.0 / p)


def _causality_rows(px_cells, wx, fx, fy_cells_t, m, transpose):
    rows = []
    n = len(px_cells)
    for t, (owner, ycells) in enumerate(zip(fx, fy_cells_t)):
        for i in range(n):
            same = [i2 for i2 in range(n) if owner[i2] == owner[i]]
            Pa = sum(wx[i2] for i2 in same)
            for B in ycells:
                row = np.zeros(n * m)
                for j in B:
                    idx = (lambda a, b: b * n + a) if transpose else (lambda a, b: a * m + b)
                    row[idx(i, j)] += Pa
                    for i2 in same:
                        row[idx(i2, j)] -= wx[i]
                rows.append(row)
    return rows


def bicausal_lp(x, y, p):
    """``AW_p`` by an LP over couplings of ``F_N`` cells with causality constraints."""
    N = x.horizon

    def collapse(z):
        cells = _cells(z.filtration[N - 1], range(z.n_atoms))
        w = np.array([z.probs[list(c)].sum() for c in cells])
        reps = [c[0] for c in cells]
        owners = [[int(z.filtration[t][r]) for r in reps] for t in range(N - 1)]
        return cells, w, reps, owners

    cx, wx, rx, ox = collapse(x)
    cy, wy, ry, oy = collapse(y)
    n, m = len(cx), len(cy)
    cost = np.array([[sum(np.linalg.norm(x.paths[rx[i], t] - y.paths[ry[j], t]) ** p for t in range(N))
                      for j in range(m)] for i in range(n)])
    A = []
    for i in range(n):
        row = np.zeros(n * m)
        row[i * m:(i + 1) * m] = 1.0
        A.append(row)
    for j in range(m):
        row = np.zeros(n * m)
        row[j::m] = 1.0
        A.append(row)
    b = list(wx) + list(wy)

    def groups(owner):
        g = {}
        for j, o in enumerate(owner):
            g.setdefault(o, []).append(j)
        return list(g.values())

    # x -> y: pi(i, B) P(a(i)) = P(i) pi(a(i), B) for B in F_t^y, t < N
    for row in _causality_rows(cx, wx, ox, [groups(o) for o in oy], m, False):
        A.append(row)
        b.append(0.0)
    for row in _causality_rows(cy, wy, oy, [groups(o) for o in ox], n, True):
        A.append(row)
        b.append(0.0)
    A = np.array(A)
    b = np.array(b)
    # drop dependent rows so the rank test in the enumeration is meaningful
    keep = []
    for k in range(A.shape[0]):
        if np.linalg.matrix_rank(A[keep + [k]]) > len(keep):
            keep.append(k)
    total = _vertex_min(cost.ravel(), A[keep], b[keep])
    return max(total, 0.0) ** (1.0 / p)
