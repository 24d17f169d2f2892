"""Shared planner machinery: lifecycle grouping, the per-agent routing
workflow, routing admission checks, and the five priority heuristics."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import topomap
from .fleet import Agent, AgentGroups, occupied_nodes
from .topomap import TopoMap

__all__ = [
    "PriorityHeuristic",
    "HEURISTIC_KINDS",
    "get_groups",
    "allow_routing",
    "route_for_active",
    "route_prefix_distance",
    "get_priorities",
]

HEURISTIC_KINDS = (
    "name",
    "time_since_task_start",
    "closest_first",
    "distance_to_node",
    "time_to_node",
)
_NODE_RELATIVE = ("distance_to_node", "time_to_node")


@dataclass(frozen=True)
class PriorityHeuristic:
    kind: str
    target: str | None = None

    def __post_init__(self):
        if self.kind not in HEURISTIC_KINDS:
            raise ValueError(f"unknown heuristic kind {self.kind!r}")
        if (self.target is not None) != (self.kind in _NODE_RELATIVE):
            raise ValueError(f"heuristic {self.kind!r}: bad target {self.target!r}")


def get_groups(agents) -> AgentGroups:
    """Partition the fleet by planning lifecycle.

    new_active: has a goal but no plan yet for it (fresh task, or the
    previous instance found no route and cleared the plan; retried so a
    temporarily blocked agent is never stranded). active: has a goal and
    a plan under execution. inactive: no goal.
    """
    new_active, active, inactive = [], [], []
    for a in sorted(agents, key=lambda a: a.id):
        if a.goal is None:
            inactive.append(a)
        elif a.route or a.fragments:
            active.append(a)
        else:
            new_active.append(a)
    return AgentGroups(new_active=new_active, active=active, inactive=inactive)


def allow_routing(topo: TopoMap, s: str | None, g: str | None) -> bool:
    """Admission check before route search: both endpoints must exist and
    differ, and there must be a goal at all."""
    if g is None or s is None:
        return False
    if s == g:
        return False
    return topo.has_node(s) and topo.has_node(g)


def route_for_active(
    topo: TopoMap,
    agent: Agent,
    fleet,
    blocking=frozenset(),
    map_mode: str = "filtered",
    hard_blocked=None,
) -> list[str] | None:
    """Plan one agent: clear its old plan, then search on its permissible
    subgraph with `blocking` removed. Installs and returns the route, or
    returns None (agent left planless, i.e. inactive this instance).

    The agent's own start is always kept in the filtered map. Its goal
    is kept unless in `hard_blocked` (defaults to other agents'
    physical positions): an agent may target a node merely reserved by a
    stale route, but never one another robot stands on or will traverse
    under a route planned earlier in this same instance.
    """
    agent.clear_plan()
    s = agent.next_attainable_node()
    g = agent.goal
    perm = topomap.permissible_subgraph(topo, agent.footprint)
    if not allow_routing(perm, s, g):
        return None
    if map_mode == "open":
        route = topomap.route_search(perm, s, g)
    elif map_mode == "filtered":
        if hard_blocked is None:
            hard_blocked = occupied_nodes(a for a in fleet if a.id != agent.id)
        keep = {s}
        if g not in hard_blocked:
            keep.add(g)
        route = topomap.route_search(perm, s, g, blocked=blocking, keep=keep)
    else:
        raise ValueError(f"unknown map_mode {map_mode!r}")
    if route is None:
        return None
    agent.route = route
    return route


def route_prefix_distance(topo: TopoMap, agent: Agent, v: str) -> float:
    """Distance along the agent's route from its physical position to the
    first occurrence of v; includes the unfinished part of an in-progress
    edge; +inf when v is not on the route."""
    route = agent.plan_nodes()
    if not route:
        return math.inf
    ahead = 0.0
    if agent.edge_progress is not None:
        edge, done = agent.edge_progress
        ahead = edge.length - done
    total = ahead
    prev = route[0]
    if prev == v:
        return total if agent.edge_progress is not None else 0.0
    for node in route[1:]:
        total += topo.edge(prev, node).length
        if node == v:
            return total
        prev = node
    return math.inf


def optimal_remaining(topo: TopoMap, agent: Agent) -> float:
    """Length of the agent's current optimal route to goal, recomputed on
    its empty permissible subgraph."""
    if agent.goal is None:
        return math.inf
    s = agent.next_attainable_node()
    if s == agent.goal:
        return 0.0
    perm = topomap.permissible_subgraph(topo, agent.footprint)
    if not perm.has_node(agent.goal) or not perm.has_node(s):
        return math.inf
    route = topomap.route_search(perm, s, agent.goal)
    if route is None:
        return math.inf
    return topomap.route_distance(perm, route)


def get_priorities(topo: TopoMap, agents, h: PriorityHeuristic) -> list[str]:
    """Agent ids ordered by ascending heuristic score (smaller score =
    planned earlier), ties broken by ascending id."""
    agents = list(agents)
    if h.kind == "name":
        ranked = {a.id: i for i, a in enumerate(sorted(agents, key=lambda a: a.id))}
        score = lambda a: ranked[a.id]
    elif h.kind == "time_since_task_start":
        score = lambda a: a.task_start_time
    elif h.kind == "closest_first":
        score = lambda a: optimal_remaining(topo, a)
    elif h.kind == "distance_to_node":
        score = lambda a: route_prefix_distance(topo, a, h.target)
    else:  # time_to_node
        score = lambda a: route_prefix_distance(topo, a, h.target) / max(
            1e-6, a.nominal_speed
        )
    return [a.id for a in sorted(agents, key=lambda a: (score(a), a.id))]
