"""Pure-Python Dijkstra over a CSR adjacency structure.

Reference implementation for the compiled kernel; both must produce
bit-identical distance arrays (same IEEE-754 double operations in the
same relaxation recurrence).
"""

import math
from heapq import heappop, heappush

import numpy as np


def dijkstra_csr(indptr, heads, weights, mask, src, target=-1):
    """Single-source shortest distances on a masked CSR digraph.

    indptr : int32[n+1]   row pointers
    heads  : int32[m]     edge head node indices
    weights: float64[m]   positive edge weights
    mask   : uint8[n]     1 = node usable, 0 = node removed
    src    : int          source node index
    target : int          stop once this node is settled (-1 = full run)

    Returns float64[n] distances, inf where unreachable or masked.
    """
    n = indptr.shape[0] - 1
    ip = indptr.tolist()
    hd = heads.tolist()
    wt = weights.tolist()
    mk = mask.tolist()
    inf = math.inf
    dist = [inf] * n
    if not mk[src]:
        return np.array(dist, dtype=np.float64)
    done = [False] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for k in range(ip[u], ip[u + 1]):
            v = hd[k]
            if not mk[v]:
                continue
            nd = d + wt[k]
            if nd < dist[v]:
                dist[v] = nd
                heappush(heap, (nd, v))
    return np.array(dist, dtype=np.float64)
