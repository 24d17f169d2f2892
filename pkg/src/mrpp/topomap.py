"""Directed topological map: nodes, constrained edges, filtering and metrics.

The map is the shared planning substrate. It is immutable after
construction; all filtering operations return new maps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

__all__ = [
    "MapError",
    "NodeId",
    "Route",
    "TopoNode",
    "TopoEdge",
    "TopoMap",
    "CorridorStats",
    "load_map",
    "loads_map",
    "save_map",
    "dumps_map",
    "permissible_subgraph",
    "filtered_map",
    "route_search",
    "route_distance",
    "edge_traversal_time",
    "corridor_stats",
]

NodeId = str
# A route is an ordered node sequence; consecutive pairs are edges of the
# map it was planned on. A single-node route means "already at goal".
Route = list

class MapError(ValueError):
    """Malformed or inconsistent map data."""


@dataclass(frozen=True)
class TopoNode:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class TopoEdge:
    """Directed edge with traversal constraints.

    `envelope` is the permissible width of the passage; robots whose
    footprint exceeds it cannot use the edge.
    """

    from_node: str
    to_node: str
    length: float
    speed_limit: float
    envelope: float


class TopoMap:
    """Directed graph of traversable nodes. Bidirectional passages are two
    opposed directed edges; there is no undirected edge representation."""

    def __init__(self, name: str, nodes: list[TopoNode], edges: list[TopoEdge]):
        self.name = name
        self.nodes: dict[str, TopoNode] = {}
        self.edges: dict[tuple[str, str], TopoEdge] = {}
        for n in nodes:
            if not n.id or any(c.isspace() for c in n.id):
                raise MapError(f"invalid node id {n.id!r}")
            if n.id in self.nodes:
                raise MapError(f"duplicate node id {n.id!r}")
            if not (math.isfinite(n.x) and math.isfinite(n.y)):
                raise MapError(f"non-finite coordinates on node {n.id!r}")
            self.nodes[n.id] = n
        for e in edges:
            if e.from_node not in self.nodes:
                raise MapError(f"edge references unknown node {e.from_node!r}")
            if e.to_node not in self.nodes:
                raise MapError(f"edge references unknown node {e.to_node!r}")
            if e.from_node == e.to_node:
                raise MapError(f"self-loop edge at {e.from_node!r}")
            key = (e.from_node, e.to_node)
            if key in self.edges:
                raise MapError(f"duplicate edge {key}")
            if not (e.length > 0 and math.isfinite(e.length)):
                raise MapError(f"non-positive length on edge {key}")
            if not (e.speed_limit > 0 and math.isfinite(e.speed_limit)):
                raise MapError(f"non-positive speed limit on edge {key}")
            if not (e.envelope > 0 and math.isfinite(e.envelope)):
                raise MapError(f"non-positive envelope on edge {key}")
            self.edges[key] = e
        self._out: dict[str, list[TopoEdge]] = {nid: [] for nid in self.nodes}
        for e in self.edges.values():
            self._out[e.from_node].append(e)
        for lst in self._out.values():
            lst.sort(key=lambda e: e.to_node)
        self._routing_index = None  # built lazily by mrpp.routing

    def out_edges(self, node_id: str) -> list[TopoEdge]:
        return self._out[node_id]

    def edge(self, u: str, v: str) -> TopoEdge:
        try:
            return self.edges[(u, v)]
        except KeyError:
            raise MapError(f"no edge {u!r} -> {v!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self.nodes

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def total_edge_length(self) -> float:
        return sum(e.length for e in self.edges.values())

    def __repr__(self) -> str:
        return f"TopoMap({self.name!r}, |V|={len(self.nodes)}, |E|={len(self.edges)})"


# --- persistence -----------------------------------------------------------

_NODE_KEYS = {"id", "x", "y"}
_EDGE_KEYS = {"from", "to", "length", "speed_limit", "envelope"}


def loads_map(text: str) -> TopoMap:
    """Parse the JSON map format. Unknown keys are rejected; a missing edge
    length defaults to the Euclidean distance between its endpoints."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MapError("map document must be a JSON object")
    extra = set(data) - {"name", "nodes", "edges"}
    if extra:
        raise MapError(f"unknown top-level keys: {sorted(extra)}")
    name = data.get("name")
    if not isinstance(name, str):
        raise MapError("map 'name' must be a string")
    nodes = []
    for nd in data.get("nodes", []):
        if not isinstance(nd, dict) or set(nd) - _NODE_KEYS:
            raise MapError(f"bad node record: {nd!r}")
        try:
            nodes.append(TopoNode(id=nd["id"], x=float(nd["x"]), y=float(nd["y"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise MapError(f"bad node record {nd!r}: {exc}") from exc
    coords = {n.id: (n.x, n.y) for n in nodes}
    edges = []
    for ed in data.get("edges", []):
        if not isinstance(ed, dict) or set(ed) - _EDGE_KEYS:
            raise MapError(f"bad edge record: {ed!r}")
        try:
            u, v = ed["from"], ed["to"]
            if "length" in ed and ed["length"] is not None:
                length = float(ed["length"])
            else:
                if u not in coords or v not in coords:
                    raise MapError(f"edge {u!r}->{v!r} references unknown node")
                (x1, y1), (x2, y2) = coords[u], coords[v]
                length = math.hypot(x2 - x1, y2 - y1)
            edges.append(
                TopoEdge(
                    from_node=u,
                    to_node=v,
                    length=length,
                    speed_limit=float(ed["speed_limit"]),
                    envelope=float(ed["envelope"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MapError(f"bad edge record {ed!r}: {exc}") from exc
    return TopoMap(name, nodes, edges)


def load_map(path: str) -> TopoMap:
    with open(path, encoding="utf-8") as fh:
        return loads_map(fh.read())


def dumps_map(topo: TopoMap) -> str:
    doc = {
        "name": topo.name,
        "nodes": [
            {"id": n.id, "x": n.x, "y": n.y}
            for n in sorted(topo.nodes.values(), key=lambda n: n.id)
        ],
        "edges": [
            {
                "from": e.from_node,
                "to": e.to_node,
                "length": e.length,
                "speed_limit": e.speed_limit,
                "envelope": e.envelope,
            }
            for e in sorted(topo.edges.values(), key=lambda e: (e.from_node, e.to_node))
        ],
    }
    return json.dumps(doc, indent=2)


def save_map(topo: TopoMap, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_map(topo))
        fh.write("\n")


# --- filtering -------------------------------------------------------------


def permissible_subgraph(topo: TopoMap, footprint: float) -> TopoMap:
    """Map restricted to edges wide enough for the given robot footprint.
    All nodes are retained. Results are cached per footprint (maps are
    immutable, and planners request the same footprints repeatedly)."""
    if footprint <= 0:
        raise ValueError("footprint must be positive")
    cache = getattr(topo, "_perm_cache", None)
    if cache is None:
        cache = {}
        topo._perm_cache = cache
    sub = cache.get(footprint)
    if sub is None:
        edges = [e for e in topo.edges.values() if e.envelope >= footprint]
        if len(edges) == len(topo.edges):
            sub = topo  # nothing filtered; reuse the map and its routing index
        else:
            sub = TopoMap(topo.name, list(topo.nodes.values()), edges)
        cache[footprint] = sub
    return sub


def filtered_map(
    topo: TopoMap, blocked: set[str], keep: set[str] = frozenset()
) -> TopoMap:
    """Remove blocked nodes and their incident edges, except nodes in `keep`."""
    removed = set(blocked) - set(keep)
    nodes = [n for n in topo.nodes.values() if n.id not in removed]
    edges = [
        e
        for e in topo.edges.values()
        if e.from_node not in removed and e.to_node not in removed
    ]
    return TopoMap(topo.name, nodes, edges)


# --- routing ---------------------------------------------------------------


def route_search(
    topo: TopoMap,
    start: str,
    goal: str,
    weight: str = "distance",
    agent_speed: float | None = None,
    blocked: set[str] = frozenset(),
    keep: set[str] = frozenset(),
) -> list[str] | None:
    """Minimal-cost route from start to goal, or None when unreachable.

    weight 'distance' uses edge length; 'time' uses
    length / min(speed_limit, agent_speed). Ties between equal-cost
    routes are broken by lexicographic next-node id, so results are
    fully deterministic.

    `blocked` / `keep` apply the same node removal as filtered_map but
    as a search mask, avoiding graph reconstruction per query. A
    blocked start or goal yields None.
    """
    from . import _routing

    try:
        return _routing.search(
            topo, start, goal, weight=weight, agent_speed=agent_speed,
            blocked=blocked, keep=keep,
        )
    except KeyError as exc:
        raise MapError(f"unknown node id {exc.args[0]!r}") from None


# --- metrics ---------------------------------------------------------------


def route_distance(topo: TopoMap, route: list[str]) -> float:
    """Total length of the traversed edges; 0 for a single-node route."""
    total = 0.0
    for u, v in zip(route, route[1:]):
        total += topo.edge(u, v).length
    return total


def edge_traversal_time(edge: TopoEdge, agent_speed: float) -> float:
    if agent_speed <= 0:
        raise ValueError("agent speed must be positive")
    return edge.length / min(edge.speed_limit, agent_speed)


@dataclass(frozen=True)
class CorridorStats:
    """Degree and articulation statistics over the undirected support graph."""

    frac_deg_le_2: float
    articulation_count: int
    node_count: int
    edge_count: int


def _support_adjacency(topo: TopoMap) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {nid: set() for nid in topo.nodes}
    for u, v in topo.edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def corridor_stats(topo: TopoMap) -> CorridorStats:
    adj = _support_adjacency(topo)
    n = len(adj)
    low_degree = sum(1 for nbrs in adj.values() if len(nbrs) <= 2)
    return CorridorStats(
        frac_deg_le_2=(low_degree / n) if n else 0.0,
        articulation_count=len(articulation_nodes(topo)),
        node_count=n,
        edge_count=len(topo.edges),
    )


def articulation_nodes(topo: TopoMap) -> set[str]:
    """Cut vertices of the undirected support graph (iterative Tarjan)."""
    adj = _support_adjacency(topo)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    parent: dict[str, str | None] = {}
    points: set[str] = set()
    counter = 0
    for root in sorted(adj):
        if root in index:
            continue
        parent[root] = None
        root_children = 0
        stack = [(root, iter(sorted(adj[root])))]
        index[root] = low[root] = counter
        counter += 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nbr in it:
                if nbr not in index:
                    parent[nbr] = node
                    index[nbr] = low[nbr] = counter
                    counter += 1
                    if node == root:
                        root_children += 1
                    stack.append((nbr, iter(sorted(adj[nbr]))))
                    advanced = True
                    break
                elif nbr != parent[node]:
                    low[node] = min(low[node], index[nbr])
            if not advanced:
                stack.pop()
                p = parent[node]
                if p is not None:
                    low[p] = min(low[p], low[node])
                    if p != root and low[node] >= index[p]:
                        points.add(p)
        if root_children >= 2:
            points.add(root)
    return points
