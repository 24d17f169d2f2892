# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dijkstra over a CSR adjacency structure.

Mirrors mrpp._kernel.pure.dijkstra_csr exactly: same relaxation
recurrence and the same (distance, node) heap ordering, so distance
arrays are bit-identical between backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def dijkstra_csr(cnp.int32_t[::1] indptr, cnp.int32_t[::1] heads,
                 cnp.float64_t[::1] weights, cnp.uint8_t[::1] mask,
                 int src, int target=-1):
    cdef int n = indptr.shape[0] - 1
    cdef int m = heads.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist_arr = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] dist = dist_arr
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] done_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] done = done_arr
    # binary heap with lazy deletion; worst case one entry per edge + source
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hkey_arr = np.empty(m + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] hnode_arr = np.empty(m + 1, dtype=np.int32)
    cdef cnp.float64_t[::1] hkey = hkey_arr
    cdef cnp.int32_t[::1] hnode = hnode_arr
    cdef int hsize = 0
    cdef int i, u, v, k, child, parent_i
    cdef double d, nd, ck
    cdef int cn
    cdef double inf = float("inf")

    for i in range(n):
        dist[i] = inf
    if mask[src] == 0:
        return dist_arr
    dist[src] = 0.0
    hkey[0] = 0.0
    hnode[0] = src
    hsize = 1
    while hsize > 0:
        d = hkey[0]
        u = hnode[0]
        # pop root: move last element down
        hsize -= 1
        if hsize > 0:
            ck = hkey[hsize]
            cn = hnode[hsize]
            i = 0
            while True:
                child = 2 * i + 1
                if child >= hsize:
                    break
                if child + 1 < hsize and (hkey[child + 1] < hkey[child] or
                        (hkey[child + 1] == hkey[child] and hnode[child + 1] < hnode[child])):
                    child += 1
                if hkey[child] < ck or (hkey[child] == ck and hnode[child] < cn):
                    hkey[i] = hkey[child]
                    hnode[i] = hnode[child]
                    i = child
                else:
                    break
            hkey[i] = ck
            hnode[i] = cn
        if done[u]:
            continue
        done[u] = 1
        if u == target:
            break
        for k in range(indptr[u], indptr[u + 1]):
            v = heads[k]
            if mask[v] == 0:
                continue
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                # sift up
                i = hsize
                hsize += 1
                while i > 0:
                    parent_i = (i - 1) >> 1
                    if hkey[parent_i] > nd or (hkey[parent_i] == nd and hnode[parent_i] > v):
                        hkey[i] = hkey[parent_i]
                        hnode[i] = hnode[parent_i]
                        i = parent_i
                    else:
                        break
                hkey[i] = nd
                hnode[i] = v
    return dist_arr
