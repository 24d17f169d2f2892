"""Agent, task, and fragment state shared by planners and the simulator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import topomap
from .topomap import TopoEdge, TopoMap

__all__ = [
    "FleetError",
    "TaskRejected",
    "Agent",
    "Task",
    "AgentGroups",
    "occupied_nodes",
    "assign_task",
    "load_fleet",
    "loads_fleet",
]


class FleetError(ValueError):
    """Malformed fleet configuration."""


class TaskRejected(Exception):
    """Goal unreachable on the agent's permissible subgraph; caller redraws."""


# A fragment is an ordered node list like a route; an agent's fragments
# concatenate (joined by single map edges) back into its full route.
Fragment = list


@dataclass
class Agent:
    """Mutable robot state.

    current_node is the node last reached. While traversing an edge,
    edge_progress holds (edge, metres travelled) with the edge departing
    from current_node; the agent then occupies both edge endpoints.
    route, when present, starts at the agent's next attainable node.
    """

    id: str
    nominal_speed: float
    footprint: float
    current_node: str
    edge_progress: tuple[TopoEdge, float] | None = None
    goal: str | None = None
    task_start_time: float = 0.0
    route: list[str] = field(default_factory=list)
    fragments: list[list[str]] = field(default_factory=list)
    optimal_route_len: float = 0.0

    def __post_init__(self):
        if self.nominal_speed <= 0:
            raise FleetError(f"agent {self.id!r}: nominal_speed must be > 0")
        if self.footprint <= 0:
            raise FleetError(f"agent {self.id!r}: footprint must be > 0")

    def next_attainable_node(self) -> str:
        """Where the agent can next make a decision: the head of the edge
        in progress, else the node it is standing on."""
        if self.edge_progress is not None:
            return self.edge_progress[0].to_node
        return self.current_node

    def clear_plan(self) -> None:
        self.route = []
        self.fragments = []

    def plan_nodes(self) -> list[str]:
        """Nodes of the agent's executable plan: the first fragment when
        fragments exist (fragment execution is one-at-a-time), else the
        route."""
        if self.fragments:
            return self.fragments[0]
        return self.route


@dataclass
class Task:
    id: int
    agent: str
    goal: str
    start_time: float
    end_time: float | None = None
    d_opt: float = 0.0
    d_exec: float = 0.0


@dataclass
class AgentGroups:
    """Planner lifecycle partition of the fleet (disjoint, covering)."""

    new_active: list[Agent]
    active: list[Agent]
    inactive: list[Agent]


def occupied_nodes(agents, mode: str = "position", subset=None) -> set[str]:
    """Nodes held by the fleet.

    `position`: a stationary agent holds its current node; an agent with an
    edge in progress holds the node it is committed to arrive at. The node
    being vacated is not held: it cannot be re-entered by the mover, and
    blocking it forces planners to detour around traffic that has already
    passed. `route`: positions plus every node of every agent's current
    plan; restricted to `subset` (ids or agents) when given.
    """
    if mode not in ("position", "route"):
        raise ValueError(f"unknown occupancy mode {mode!r}")
    if subset is not None:
        wanted = {a if isinstance(a, str) else a.id for a in subset}
        agents = [a for a in agents if a.id in wanted]
    held: set[str] = set()
    for a in agents:
        if a.edge_progress is None:
            held.add(a.current_node)
        else:
            held.add(a.edge_progress[0].to_node)
        if mode == "route":
            held.add(a.current_node)
            held.update(a.route)
            for frag in a.fragments:
                held.update(frag)
    return held


def assign_task(agent: Agent, goal: str, now: float, topo: TopoMap) -> Task:
    """Give the agent a new goal; d_opt is the optimal distance on the
    agent's permissible subgraph with no other agents present."""
    perm = topomap.permissible_subgraph(topo, agent.footprint)
    if not perm.has_node(goal):
        raise TaskRejected(goal)
    route = topomap.route_search(perm, agent.next_attainable_node(), goal)
    if route is None:
        raise TaskRejected(goal)
    d_opt = topomap.route_distance(perm, route)
    agent.goal = goal
    agent.task_start_time = now
    agent.optimal_route_len = d_opt
    agent.clear_plan()
    return Task(id=-1, agent=agent.id, goal=goal, start_time=now, d_opt=d_opt)


# --- fleet configuration ---------------------------------------------------

_AGENT_KEYS = {"id", "nominal_speed", "footprint", "start_node"}
_SHORTHAND_KEYS = {"count", "nominal_speed", "footprint", "start_nodes"}


def _auto_start_nodes(topo: TopoMap, count: int) -> list[str]:
    """Deterministic spawn points: spread over the header corridors when
    the map has them (generated maps), else over all nodes by id."""
    ids = sorted(topo.nodes)
    headers = [nid for nid in ids if nid.startswith(("h0_", "h1_"))]
    pool = headers or ids
    if count > len(pool):
        raise FleetError(f"fleet of {count} exceeds {len(pool)} start candidates")
    return [pool[i * len(pool) // count] for i in range(count)]


def loads_fleet(text: str, topo: TopoMap) -> list[Agent]:
    """Parse fleet JSON: either an explicit agents list or the
    homogeneous shorthand {"count", "nominal_speed", "footprint",
    "start_nodes": "auto"}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FleetError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FleetError("fleet document must be a JSON object")
    if "agents" in data:
        if set(data) != {"agents"}:
            raise FleetError("explicit fleet config takes only 'agents'")
        records = data["agents"]
        agents = []
        for rec in records:
            if not isinstance(rec, dict) or set(rec) != _AGENT_KEYS:
                raise FleetError(f"bad agent record: {rec!r}")
            if not topo.has_node(rec["start_node"]):
                raise FleetError(f"unknown start node {rec['start_node']!r}")
            agents.append(
                Agent(
                    id=str(rec["id"]),
                    nominal_speed=float(rec["nominal_speed"]),
                    footprint=float(rec["footprint"]),
                    current_node=rec["start_node"],
                )
            )
    elif set(data) == _SHORTHAND_KEYS:
        if data["start_nodes"] != "auto":
            raise FleetError("shorthand start_nodes must be 'auto'")
        count = int(data["count"])
        if count < 1:
            raise FleetError("count must be >= 1")
        starts = _auto_start_nodes(topo, count)
        agents = [
            Agent(
                id=f"a{i:02d}",
                nominal_speed=float(data["nominal_speed"]),
                footprint=float(data["footprint"]),
                current_node=starts[i],
            )
            for i in range(count)
        ]
    else:
        raise FleetError(f"unrecognised fleet config keys: {sorted(data)}")
    seen = set()
    for a in agents:
        if a.id in seen:
            raise FleetError(f"duplicate agent id {a.id!r}")
        seen.add(a.id)
        if not math.isfinite(a.nominal_speed) or not math.isfinite(a.footprint):
            raise FleetError(f"agent {a.id!r}: non-finite parameters")
    return agents


def load_fleet(path: str, topo: TopoMap) -> list[Agent]:
    with open(path, encoding="utf-8") as fh:
        return loads_fleet(fh.read(), topo)
