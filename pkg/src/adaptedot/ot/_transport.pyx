# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled transportation simplex (same pivoting as ``_transport_py``)."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport fabs

cnp.import_array()


cdef int _solve(int n, int m, const double* a, const double* b,
                const double* c, double* plan, int max_iter) noexcept nogil:
    cdef int nn = n + m
    cdef int nb = n + m - 1
    cdef int i, j, k, v, w, e, pos, qend, it, va, vb, na, nbp, ncyc
    cdef int enter_i, enter_j, leave, idx, best
    cdef double x, theta, scale, eps, ui, rc

    cdef double* ra = <double*> malloc(n * sizeof(double))
    cdef double* rb = <double*> malloc(m * sizeof(double))
    cdef int* bi = <int*> malloc(nb * sizeof(int))
    cdef int* bj = <int*> malloc(nb * sizeof(int))
    cdef double* flow = <double*> malloc(nb * sizeof(double))
    cdef char* basic = <char*> malloc(n * m * sizeof(char))
    cdef int* adj_start = <int*> malloc((nn + 1) * sizeof(int))
    cdef int* adj_node = <int*> malloc(2 * nb * sizeof(int))
    cdef int* adj_edge = <int*> malloc(2 * nb * sizeof(int))
    cdef int* fill = <int*> malloc(nn * sizeof(int))
    cdef int* parent = <int*> malloc(nn * sizeof(int))
    cdef int* pedge = <int*> malloc(nn * sizeof(int))
    cdef int* depth = <int*> malloc(nn * sizeof(int))
    cdef double* pot = <double*> malloc(nn * sizeof(double))
    cdef char* seen = <char*> malloc(nn * sizeof(char))
    cdef int* order = <int*> malloc(nn * sizeof(int))
    cdef int* path_a = <int*> malloc(nn * sizeof(int))
    cdef int* path_b = <int*> malloc(nn * sizeof(int))
    cdef int* cycle = <int*> malloc(2 * nn * sizeof(int))
    cdef double* supply = <double*> malloc(nn * sizeof(double))
    cdef int* deg = <int*> malloc(nn * sizeof(int))
    cdef char* alive = <char*> malloc(nb * sizeof(char))
    cdef int* stack = <int*> malloc(4 * nn * sizeof(int))
    cdef int sp, done
    cdef int status = 0

    scale = 0.0
    for k in range(n * m):
        if fabs(c[k]) > scale:
            scale = fabs(c[k])
    eps = 1e-12 * scale

    # northwest corner
    for i in range(n):
        ra[i] = a[i]
    for j in range(m):
        rb[j] = b[j]
    for k in range(n * m):
        basic[k] = 0
    i = 0
    j = 0
    k = 0
    while True:
        x = ra[i] if ra[i] < rb[j] else rb[j]
        bi[k] = i
        bj[k] = j
        flow[k] = x
        basic[i * m + j] = 1
        k += 1
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

    it = 0
    while True:
        # adjacency (insertion order matches the Python lists)
        for v in range(nn + 1):
            adj_start[v] = 0
        for k in range(nb):
            adj_start[bi[k] + 1] += 1
            adj_start[n + bj[k] + 1] += 1
        for v in range(nn):
            adj_start[v + 1] += adj_start[v]
            fill[v] = adj_start[v]
        for k in range(nb):
            v = bi[k]
            w = n + bj[k]
            adj_node[fill[v]] = w
            adj_edge[fill[v]] = k
            fill[v] += 1
            adj_node[fill[w]] = v
            adj_edge[fill[w]] = k
            fill[w] += 1
        for v in range(nn):
            parent[v] = -1
            pedge[v] = -1
            depth[v] = 0
            pot[v] = 0.0
            seen[v] = 0
        seen[0] = 1
        order[0] = 0
        qend = 1
        pos = 0
        while pos < qend:
            v = order[pos]
            pos += 1
            for e in range(adj_start[v], adj_start[v + 1]):
                w = adj_node[e]
                if not seen[w]:
                    k = adj_edge[e]
                    seen[w] = 1
                    parent[w] = v
                    pedge[w] = k
                    depth[w] = depth[v] + 1
                    pot[w] = c[bi[k] * m + bj[k]] - pot[v]
                    order[qend] = w
                    qend += 1

        enter_i = -1
        enter_j = -1
        for i in range(n):
            ui = pot[i]
            for j in range(m):
                if not basic[i * m + j]:
                    rc = c[i * m + j] - ui - pot[n + j]
                    if rc < -eps:
                        enter_i = i
                        enter_j = j
                        break
            if enter_i >= 0:
                break
        if enter_i < 0:
            break
        it += 1
        if it > max_iter:
            status = -1
            break

        va = enter_i
        vb = n + enter_j
        na = 0
        nbp = 0
        while depth[va] > depth[vb]:
            path_a[na] = pedge[va]
            na += 1
            va = parent[va]
        while depth[vb] > depth[va]:
            path_b[nbp] = pedge[vb]
            nbp += 1
            vb = parent[vb]
        while va != vb:
            path_a[na] = pedge[va]
            na += 1
            va = parent[va]
            path_b[nbp] = pedge[vb]
            nbp += 1
            vb = parent[vb]
        ncyc = 0
        for k in range(nbp):
            cycle[ncyc] = path_b[k]
            ncyc += 1
        for k in range(na - 1, -1, -1):
            cycle[ncyc] = path_a[k]
            ncyc += 1

        theta = flow[cycle[0]]
        for k in range(0, ncyc, 2):
            if flow[cycle[k]] < theta:
                theta = flow[cycle[k]]
        leave = -1
        best = 0
        for k in range(0, ncyc, 2):
            e = cycle[k]
            if flow[e] <= theta:
                idx = bi[e] * m + bj[e]
                if leave < 0 or idx < best:
                    leave = e
                    best = idx
        for k in range(1, ncyc, 2):
            flow[cycle[k]] += theta
        for k in range(0, ncyc, 2):
            flow[cycle[k]] -= theta
        basic[bi[leave] * m + bj[leave]] = 0
        bi[leave] = enter_i
        bj[leave] = enter_j
        flow[leave] = theta
        basic[enter_i * m + enter_j] = 1

    if status == 0:
        # leaf elimination, same visiting order as the Python version
        for v in range(n):
            supply[v] = a[v]
        for v in range(m):
            supply[n + v] = b[v]
        for v in range(nn + 1):
            adj_start[v] = 0
        for k in range(nb):
            adj_start[bi[k] + 1] += 1
            adj_start[n + bj[k] + 1] += 1
        for v in range(nn):
            adj_start[v + 1] += adj_start[v]
            fill[v] = adj_start[v]
        for k in range(nb):
            v = bi[k]
            w = n + bj[k]
            adj_edge[fill[v]] = k
            fill[v] += 1
            adj_edge[fill[w]] = k
            fill[w] += 1
        for v in range(nn):
            deg[v] = adj_start[v + 1] - adj_start[v]
        for k in range(nb):
            alive[k] = 1
            flow[k] = 0.0
        sp = 0
        for v in range(nn):
            if deg[v] == 1:
                stack[sp] = v
                sp += 1
        done = 0
        while sp > 0 and done < nb:
            sp -= 1
            v = stack[sp]
            if deg[v] != 1:
                continue
            k = -1
            for e in range(adj_start[v], adj_start[v + 1]):
                if alive[adj_edge[e]]:
                    k = adj_edge[e]
                    break
            x = supply[v]
            flow[k] = x if x > 0.0 else 0.0
            alive[k] = 0
            done += 1
            if v < n:
                w = n + bj[k]
            else:
                w = bi[k]
            supply[v] = 0.0
            supply[w] -= x
            deg[v] -= 1
            deg[w] -= 1
            if deg[w] == 1:
                stack[sp] = w
                sp += 1
        for k in range(n * m):
            plan[k] = 0.0
        for k in range(nb):
            plan[bi[k] * m + bj[k]] = flow[k]
        status = it

    free(ra); free(rb); free(bi); free(bj); free(flow); free(basic)
    free(adj_start); free(adj_node); free(adj_edge); free(fill)
    free(parent); free(pedge); free(depth); free(pot); free(seen); free(order)
    free(path_a); free(path_b); free(cycle); free(supply); free(deg)
    free(alive); free(stack)
    return status


def transport_simplex(a, b, cost, int max_iter=100000):
    """Compiled counterpart of ``_transport_py.transport_simplex``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cv = np.ascontiguousarray(cost, dtype=np.float64)
    cdef int n = av.shape[0]
    cdef int m = bv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] plan = np.zeros((n, m), dtype=np.float64)
    cdef int status
    cdef const double* ap = &av[0]
    cdef const double* bp = &bv[0]
    cdef const double* cp = &cv[0, 0]
    cdef double* pp = &plan[0, 0]
    with nogil:
        status = _solve(n, m, ap, bp, cp, pp, max_iter)
    if status < 0:
        raise RuntimeError("transportation simplex exceeded max_iter")
    return plan, status
