"""Pure-Python transportation simplex.

Mirror of ``_transport.pyx``: same initial basis, same pivoting rule, same
final flow reconstruction, so both backends return identical plans.
"""

import numpy as np

__all__ = ["transport_simplex"]


def _northwest_corner(a, b):
    n, m = len(a), len(b)
    ra, rb = list(a), list(b)
    bi, bj, flow = [], [], []
    i = j = 0
    while True:
        x = ra[i] if ra[i] < rb[j] else rb[j]
        bi.append(i)
        bj.append(j)
        flow.append(x)
        ra[i] -= x
        rb[j] -= x
        if i == n - 1 and j == m - 1:
            break
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return bi, bj, flow


def _tree_flows(a, b, bi, bj):
    """Unique basic solution of the spanning-tree basis (leaf elimination)."""
    n, m = len(a), len(b)
    nb = len(bi)
    supply = list(a) + list(b)
    deg = [0] * (n + m)
    incident = [[] for _ in range(n + m)]
    for k in range(nb):
        incident[bi[k]].append(k)
        incident[n + bj[k]].append(k)
        deg[bi[k]] += 1
        deg[n + bj[k]] += 1
    alive = [True] * nb
    flow = [0.0] * nb
    stack = [v for v in range(n + m) if deg[v] == 1]
    done = 0
    while stack and done < nb:
        v = stack.pop()
        if deg[v] != 1:
            continue
        k = next(e for e in incident[v] if alive[e])
        x = supply[v]
        flow[k] = x if x > 0.0 else 0.0
        alive[k] = False
        done += 1
        w = n + bj[k] if v < n else bi[k]
        supply[v] = 0.0
        supply[w] -= x
        deg[v] -= 1
        deg[w] -= 1
        if deg[w] == 1:
            stack.append(w)
    return flow


def transport_simplex(a, b, cost, max_iter=100000):
    """Solve min <P, C> over couplings of ``a`` and ``b``.

    ``a`` and ``b`` must be strictly positive with equal totals. Returns the
    ``(n, m)`` optimal vertex plan and the number of pivots performed.
    Entering cell: lowest row-major index with negative reduced cost;
    leaving cell: lowest index among ratio-test ties (Bland).
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    C = np.asarray(cost, dtype=float)
    n, m = len(a), len(b)
    c = C.tolist()
    scale = float(np.max(np.abs(C))) if C.size else 0.0
    eps = 1e-12 * scale

    bi, bj, flow = _northwest_corner(a, b)
    nb = len(bi)
    basic = [[False] * m for _ in range(n)]
    for k in range(nb):
        basic[bi[k]][bj[k]] = True

    nn = n + m
    it = 0
    while True:
        adj = [[] for _ in range(nn)]
        for k in range(nb):
            adj[bi[k]].append((n + bj[k], k))
            adj[n + bj[k]].append((bi[k], k))
        parent = [-1] * nn
        pedge = [-1] * nn
        depth = [0] * nn
        pot = [0.0] * nn
        seen = [False] * nn
        seen[0] = True
        order = [0]
        pos = 0
        while pos < len(order):
            v = order[pos]
            pos += 1
            for w, k in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = v
                    pedge[w] = k
                    depth[w] = depth[v] + 1
                    pot[w] = c[bi[k]][bj[k]] - pot[v]
                    order.append(w)

        enter_i = enter_j = -1
        for i in range(n):
            ci = c[i]
            ui = pot[i]
            bas = basic[i]
            for j in range(m):
                if not bas[j] and ci[j] - ui - pot[n + j] < -eps:
                    enter_i, enter_j = i, j
                    break
            if enter_i >= 0:
                break
        if enter_i < 0:
            break
        it += 1
        if it > max_iter:
            raise RuntimeError("transportation simplex exceeded max_iter")

        # cycle: entering cell, then the tree path from column to row
        va, vb = enter_i, n + enter_j
        path_a, path_b = [], []
        while depth[va] > depth[vb]:
            path_a.append(pedge[va])
            va = parent[va]
        while depth[vb] > depth[va]:
            path_b.append(pedge[vb])
            vb = parent[vb]
        while va != vb:
            path_a.append(pedge[va])
            va = parent[va]
            path_b.append(pedge[vb])
            vb = parent[vb]
        cycle = path_b + path_a[::-1]
        minus = cycle[0::2]
        plus = cycle[1::2]

        theta = min(flow[k] for k in minus)
        leave = -1
        for k in minus:
            if flow[k] <= theta:
                if leave < 0 or bi[k] * m + bj[k] < bi[leave] * m + bj[leave]:
                    leave = k
        for k in plus:
            flow[k] += theta
        for k in minus:
            flow[k] -= theta
        basic[bi[leave]][bj[leave]] = False
        bi[leave], bj[leave] = enter_i, enter_j
        flow[leave] = theta
        basic[enter_i][enter_j] = True

    final = _tree_flows(a, b, bi, bj)
    plan = np.zeros((n, m))
    for k in range(nb):
        plan[bi[k], bj[k]] = final[k]
    return plan, it
