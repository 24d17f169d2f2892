"""CSR routing index and deterministic shortest-route search.

Route search runs Dijkstra from the goal over the reversed graph, then
walks forward from the start greedily: at each step it takes the
lexicographically smallest next node that lies on a shortest path.
This makes tie-breaking among equal-cost routes deterministic and
independent of heap pop order.

Indexes are cached on the map object; node masks make blocking cheap
(no per-query graph reconstruction).
"""

from __future__ import annotations

import numpy as np

from ._kernel import dijkstra_csr

_DIST_EPS = 0.0  # exact float equality; both backends share the arithmetic


class RoutingIndex:
    """Immutable CSR view of a TopoMap (forward and reverse adjacency)."""

    def __init__(self, topo):
        self.ids: list[str] = sorted(topo.nodes)
        self.rank: dict[str, int] = {nid: i for i, nid in enumerate(self.ids)}
        n = len(self.ids)
        m = len(topo.edges)
        fwd = sorted(topo.edges.values(), key=lambda e: (e.from_node, e.to_node))
        rev = sorted(topo.edges.values(), key=lambda e: (e.to_node, e.from_node))
        self.indptr = np.zeros(n + 1, dtype=np.int32)
        self.heads = np.empty(m, dtype=np.int32)
        self.lengths = np.empty(m, dtype=np.float64)
        self.speed_limits = np.empty(m, dtype=np.float64)
        self.rindptr = np.zeros(n + 1, dtype=np.int32)
        self.rheads = np.empty(m, dtype=np.int32)
        self.rlengths = np.empty(m, dtype=np.float64)
        self.rspeed_limits = np.empty(m, dtype=np.float64)
        for k, e in enumerate(fwd):
            self.indptr[self.rank[e.from_node] + 1] += 1
            self.heads[k] = self.rank[e.to_node]
            self.lengths[k] = e.length
            self.speed_limits[k] = e.speed_limit
        for k, e in enumerate(rev):
            self.rindptr[self.rank[e.to_node] + 1] += 1
            self.rheads[k] = self.rank[e.from_node]
            self.rlengths[k] = e.length
            self.rspeed_limits[k] = e.speed_limit
        np.cumsum(self.indptr, out=self.indptr)
        np.cumsum(self.rindptr, out=self.rindptr)
        self._ones = np.ones(n, dtype=np.uint8)
        self._time_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        # python-native copies for the forward reconstruction walk
        self._ip = self.indptr.tolist()
        self._hd = self.heads.tolist()

    @property
    def n(self) -> int:
        return len(self.ids)

    def weight_arrays(self, weight: str, agent_speed) -> tuple[np.ndarray, np.ndarray]:
        """(forward, reverse) per-edge weight arrays for the given metric."""
        if weight == "distance":
            return self.lengths, self.rlengths
        if weight == "time":
            if agent_speed is None or agent_speed <= 0:
                raise ValueError("time weighting requires a positive agent_speed")
            key = float(agent_speed)
            hit = self._time_cache.get(key)
            if hit is None:
                fw = self.lengths / np.minimum(self.speed_limits, key)
                rw = self.rlengths / np.minimum(self.rspeed_limits, key)
                hit = (fw, rw)
                self._time_cache[key] = hit
            return hit
        raise ValueError(f"unknown weight {weight!r}")

    def mask_for(self, blocked, keep) -> np.ndarray:
        if not blocked:
            return self._ones
        mask = np.ones(self.n, dtype=np.uint8)
        for nid in blocked:
            if nid in keep:
                continue
            ix = self.rank.get(nid)
            if ix is not None:
                mask[ix] = 0
        return mask


def routing_index(topo) -> RoutingIndex:
    idx = topo._routing_index
    if idx is None:
        idx = RoutingIndex(topo)
        topo._routing_index = idx
    return idx


def distances_from(
    topo, source: str, weight: str = "distance", agent_speed=None,
    blocked=frozenset(), keep=frozenset(),
) -> dict[str, float]:
    """Shortest distance from `source` to every reachable node."""
    idx = routing_index(topo)
    if source not in idx.rank:
        raise KeyError(source)
    fw, _ = idx.weight_arrays(weight, agent_speed)
    mask = idx.mask_for(blocked, keep)
    dist = dijkstra_csr(idx.indptr, idx.heads, fw, mask, idx.rank[source], -1)
    return {
        nid: float(dist[i]) for i, nid in enumerate(idx.ids) if dist[i] != np.inf
    }


def search(
    topo, start: str, goal: str, weight: str = "distance", agent_speed=None,
    blocked=frozenset(), keep=frozenset(),
):
    """Shortest route as a node-id list, or None when unreachable.

    `blocked` nodes (minus `keep`) are treated as removed. A blocked
    start or goal makes the search fail (None).
    """
    idx = routing_index(topo)
    if start not in idx.rank or goal not in idx.rank:
        raise KeyError(start if start not in idx.rank else goal)
    s = idx.rank[start]
    g = idx.rank[goal]
    mask = idx.mask_for(blocked, keep)
    if not mask[s] or not mask[g]:
        return None
    if s == g:
        return [start]
    fw, rw = idx.weight_arrays(weight, agent_speed)
    # distance-to-goal for every node: Dijkstra from goal on reversed edges
    dist = dijkstra_csr(idx.rindptr, idx.rheads, rw, mask, g, s)
    if dist[s] == np.inf:
        return None
    ip, hd = idx._ip, idx._hd
    fwl = fw.tolist()
    dl = dist.tolist()
    route = [start]
    u = s
    steps = 0
    while u != g:
        du = dl[u]
        nxt = -1
        for k in range(ip[u], ip[u + 1]):
            v = hd[k]
            if mask[v] and fwl[k] + dl[v] == du:
                nxt = v  # heads sorted ascending: first hit is smallest id
                break
        if nxt < 0:
            raise RuntimeError("route reconstruction failed")
        route.append(idx.ids[nxt])
        u = nxt
        steps += 1
        if steps > idx.n:
            raise RuntimeError("route reconstruction cycle")
    return route
