"""Shared builders for the test suite: tiny hand maps, random corridor
maps with float-exact edge lengths, and fleet state factories."""

from __future__ import annotations

import random

from mrpp import Agent, TopoEdge, TopoMap, TopoNode
from mrpp.mapgen import PolytunnelParams, generate_polytunnel

# Dyadic lengths: route cost sums are exact in float64, so oracle
# comparisons in the golden tests can use == instead of a tolerance.
DYADIC_LENGTHS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0)
DYADIC_SPEEDS = (0.5, 1.0, 2.0, 4.0)


def build_map(edges, coords=None, name="m"):
    """Map from (u, v, length[, speed_limit[, envelope]]) tuples; edges
    are directed exactly as given."""
    ids = []
    for spec in edges:
        for nid in spec[:2]:
            if nid not in ids:
                ids.append(nid)
    coords = coords or {}
    nodes = [
        TopoNode(nid, *coords.get(nid, (float(i), 0.0)))
        for i, nid in enumerate(ids)
    ]
    topo_edges = []
    for spec in edges:
        u, v, length = spec[0], spec[1], float(spec[2])
        speed = float(spec[3]) if len(spec) > 3 else 1.0
        env = float(spec[4]) if len(spec) > 4 else 1.0
        topo_edges.append(TopoEdge(u, v, length, speed, env))
    return TopoMap(name, nodes, topo_edges)


def line_map(ids="ABCDE", length=1.0, speed=1.0, envelope=1.0, name="line"):
    """Bidirectional chain over the given node ids."""
    edges = []
    for u, v in zip(ids, ids[1:]):
        edges.append((u, v, length, speed, envelope))
        edges.append((v, u, length, speed, envelope))
    return build_map(edges, name=name)


def make_agent(
    aid,
    node,
    goal=None,
    speed=1.0,
    footprint=0.5,
    route=None,
    fragments=None,
    task_start=0.0,
):
    a = Agent(id=aid, nominal_speed=speed, footprint=footprint, current_node=node)
    a.goal = goal
    a.task_start_time = task_start
    if route is not None:
        a.route = list(route)
    if fragments is not None:
        a.fragments = [list(f) for f in fragments]
    return a


def random_small_map(rng: random.Random, max_nodes=12, name="rand"):
    """Random directed map (a bidirectional spanning tree plus a few
    extra directed edges) with dyadic lengths and speed limits."""
    n = rng.randint(4, max_nodes)
    ids = [f"n{i:02d}" for i in range(n)]
    edges = {}

    def add(u, v):
        if u != v and (u, v) not in edges:
            edges[(u, v)] = (
                u,
                v,
                rng.choice(DYADIC_LENGTHS),
                rng.choice(DYADIC_SPEEDS),
                1.0,
            )

    for i in range(1, n):
        j = rng.randrange(i)
        add(ids[j], ids[i])
        add(ids[i], ids[j])
    for _ in range(rng.randint(0, 6)):
        add(rng.choice(ids), rng.choice(ids))
    coords = {nid: (float(i), float(i % 3)) for i, nid in enumerate(ids)}
    return build_map(list(edges.values()), coords=coords, name=name)


def mini_tunnel_map(n_tunnels=1, rows=3, nodes_per_row=2):
    """Small generated corridor map; the header loops let agents pass."""
    return generate_polytunnel(
        PolytunnelParams(
            n_tunnels=n_tunnels,
            rows_per_tunnel=rows,
            nodes_per_row=nodes_per_row,
            row_spacing=2.0,
            node_spacing=1.0,
            header_speed_limit=2.0,
            row_speed_limit=1.0,
            envelope=1.0,
        )
    )


def random_instance(rng: random.Random, n_agents=None):
    """One planning instance worth of state: a corridor map plus
    stationary agents with distinct starts and reachable goals."""
    topo = mini_tunnel_map(rng.randint(1, 2), rng.randint(2, 4), rng.randint(2, 3))
    ids = sorted(topo.nodes)
    if n_agents is None:
        n_agents = rng.randint(2, min(6, len(ids) // 3))
    starts = rng.sample(ids, n_agents)
    agents = []
    for i, s in enumerate(starts):
        goal = rng.choice([v for v in ids if v != s])
        agents.append(
            make_agent(f"a{i:02d}", s, goal=goal, task_start=rng.uniform(0.0, 100.0))
        )
    return topo, agents
