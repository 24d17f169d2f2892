"""Deterministic event-driven lifelong simulation.

Motion is lazy: starting an edge schedules an arrival event; an edge in
progress is never cancelled (replanning happens from its head).
Events at one timestamp form a batch, ordered arrivals (rank 0) before
fallback ticks (rank 1) and by agent id within a rank. After a batch,
at most one planning instance runs, then stationary agents with
executable plans depart; a departure vacates a node before any
later-timestamp arrival reaches it.

Everything downstream of the seed is counter-based and ordered, so a
trial is a pure function of its config.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import time as _time
from dataclasses import asdict, dataclass

from . import topomap
from .fleet import (
    Agent,
    FleetError,
    Task,
    TaskRejected,
    assign_task,
    loads_fleet,
    occupied_nodes,
)
from .mapgen import generate_reference_scale
from .metrics import TrialResult
from .planners import PbsState, PlannerKind, find_routes
from .topomap import TopoMap

__all__ = [
    "CounterRng",
    "TrialConfig",
    "CollisionEvent",
    "Simulation",
    "run_trial",
    "resolve_map",
    "detect_collisions",
]


class CounterRng:
    """Counter-based deterministic RNG: draw k is a pure function of
    (seed, k), independent of platform and process interleaving."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.counter = 0

    def draw(self, n: int) -> int:
        """Uniform int in [0, n)."""
        if n <= 0:
            raise ValueError("empty draw range")
        digest = hashlib.sha256(f"{self.seed}:{self.counter}".encode()).digest()
        self.counter += 1
        return int.from_bytes(digest[:8], "big") % n


@dataclass(frozen=True)
class TrialConfig:
    map_source: str = "preset:reference"
    fleet: int | dict = 5
    planner: str = "fp:space_only"
    duration: float = 3600.0
    seed: int = 0
    fallback_period_s: float = 5.0
    pbs_window_s: float = 10.0
    pbs_max_attempts: int = 50
    collision_check: bool | None = None  # None: on unless planner is naive
    strict: bool = True

    def validate(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.fallback_period_s <= 0:
            raise ValueError("fallback_period_s must be > 0")
        PlannerKind.parse(self.planner)

    @property
    def check_enabled(self) -> bool:
        if self.collision_check is None:
            return self.planner != "naive"
        return self.collision_check

    def trial_id(self) -> str:
        return f"{self.planner.replace(':', '-')}_f{self.fleet_size():02d}_s{self.seed}"

    def fleet_size(self) -> int:
        if isinstance(self.fleet, int):
            return self.fleet
        if "agents" in self.fleet:
            return len(self.fleet["agents"])
        return int(self.fleet["count"])


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    kind: str  # node | edge | crossing
    agents: tuple[str, str]
    where: str | tuple[str, str]


def resolve_map(source: str) -> TopoMap:
    if source == "preset:reference":
        return generate_reference_scale()
    if source.startswith("preset:"):
        raise ValueError(f"unknown preset {source!r}")
    return topomap.load_map(source)


def _build_fleet(cfg_fleet, topo: TopoMap) -> list[Agent]:
    if isinstance(cfg_fleet, int):
        cfg_fleet = {
            "count": cfg_fleet,
            "nominal_speed": 1.0,
            "footprint": 0.8,
            "start_nodes": "auto",
        }
    return loads_fleet(json.dumps(cfg_fleet), topo)


def _eff_speed(edge, agent: Agent) -> float:
    return min(edge.speed_limit, agent.nominal_speed)


def detect_collisions(agents, now: float = 0.0) -> list[CollisionEvent]:
    """Current-state pairwise overlap check (the three topological
    classes). The simulator's inline checks at event boundaries are
    equivalent; this standalone form exists for tests and audits."""
    out = []
    ordered = sorted(agents, key=lambda a: a.id)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            pair = (a.id, b.id)
            if a.edge_progress is None and b.edge_progress is None:
                if a.current_node == b.current_node:
                    out.append(CollisionEvent(now, "node", pair, a.current_node))
            elif a.edge_progress is not None and b.edge_progress is not None:
                ea, eb = a.edge_progress[0], b.edge_progress[0]
                if (ea.from_node, ea.to_node) == (eb.from_node, eb.to_node):
                    out.append(
                        CollisionEvent(now, "edge", pair, (ea.from_node, ea.to_node))
                    )
                elif (ea.from_node, ea.to_node) == (eb.to_node, eb.from_node):
                    out.append(
                        CollisionEvent(
                            now, "crossing", pair, (ea.from_node, ea.to_node)
                        )
                    )
    return out


def _dijkstra_from(topo: TopoMap, target: str) -> dict[str, float]:
    """Distances from every node to `target`, walking edges backwards."""
    into: dict[str, list] = {nid: [] for nid in topo.nodes}
    for e in topo.edges.values():
        into[e.to_node].append(e)
    dist = {target: 0.0}
    heap = [(0.0, target)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for e in into[v]:
            u = e.from_node
            nd = d + e.length
            if nd < dist.get(u, math.inf):
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


_RANK_ARRIVAL = 0
_RANK_TICK = 1

# fallback periods an agent may sit planless with a goal, while others keep
# moving, before the liveness valve treats it as starved and rescues it
_STARVE_PERIODS = 6.0


class Simulation:
    """One trial's owned state and event loop."""

    def __init__(self, config: TrialConfig, topo: TopoMap | None = None):
        config.validate()
        self.config = config
        self.topo = topo if topo is not None else resolve_map(config.map_source)
        self.agents = _build_fleet(config.fleet, self.topo)
        starts = [a.current_node for a in self.agents]
        if len(set(starts)) != len(starts):
            raise FleetError("start nodes must be distinct")
        self.by_id = {a.id: a for a in self.agents}
        self.id_order = sorted(self.by_id)
        self.planner = PlannerKind.parse(config.planner)
        self.rng = CounterRng(config.seed)
        self.now = 0.0
        self.heap: list[tuple[float, int, str]] = []
        self.tasks: list[Task] = []
        self.active_task: dict[str, Task] = {}
        self.collisions: list[CollisionEvent] = []
        self.stalls = 0
        self.depart_time: dict[str, float] = {}
        self.last_progress = 0.0  # last motion or completion (stall tracking)
        self._node_ids = sorted(self.topo.nodes)
        self._memo: dict[tuple, dict] = {}
        self._pbs_state = PbsState() if self.planner.kind == "pbs" else None
        self._rescue_round = 0
        self._starved_since: dict[str, float] = {}
        self._tick_index = 0
        self._check = config.check_enabled

    # --- task lifecycle -----------------------------------------------------

    def spawn_task(self, agent: Agent) -> Task | None:
        """Draw a goal uniformly from nodes no agent occupies (and not the
        agent's own node); redraw without replacement on unreachable
        goals, up to 50 draws. None = agent idles until a later retry."""
        held = occupied_nodes(self.agents)
        cands = [v for v in self._node_ids if v not in held and v != agent.current_node]
        for _ in range(min(50, len(cands))):
            goal = cands.pop(self.rng.draw(len(cands)))
            try:
                task = assign_task(agent, goal, self.now, self.topo)
            except TaskRejected:
                continue
            task.id = len(self.tasks)
            self.tasks.append(task)
            self.active_task[agent.id] = task
            return task
        return None

    def _complete_task(self, agent: Agent) -> bool:
        task = self.active_task.pop(agent.id)
        task.end_time = self.now
        agent.goal = None
        agent.optimal_route_len = 0.0
        agent.clear_plan()
        self.last_progress = self.now
        return self.spawn_task(agent) is not None

    # --- planning -----------------------------------------------------------

    def _materialize_progress(self) -> None:
        for aid, t0 in self.depart_time.items():
            a = self.by_id[aid]
            edge = a.edge_progress[0]
            a.edge_progress = (edge, (self.now - t0) * _eff_speed(edge, a))

    def _fingerprint(self) -> tuple:
        rows = []
        for aid in self.id_order:
            a = self.by_id[aid]
            ep = a.edge_progress
            rows.append(
                (
                    aid,
                    a.current_node,
                    None if ep is None else (ep[0].from_node, ep[0].to_node, ep[1]),
                    a.goal,
                    a.task_start_time,
                    tuple(a.route),
                    tuple(tuple(f) for f in a.fragments),
                )
            )
        return tuple(rows)

    def planning_instance(self) -> None:
        """Run the configured planner over the full fleet. Stateless
        planners are deterministic functions of the fleet/map state, so
        identical pre-states replay the recorded plans instead of
        replanning (frequent during quiescent fallback ticks); the
        ruleset search carries state between instances, so its plans are
        never memoised."""
        self._materialize_progress()
        pre = None
        if self._pbs_state is None:
            pre = self._fingerprint()
            hit = self._memo.get(pre)
            if hit is not None:
                for aid, (route, frags) in hit.items():
                    a = self.by_id[aid]
                    a.route = list(route)
                    a.fragments = [list(f) for f in frags]
                self._unfreeze(pre)
                return
        find_routes(
            self.topo,
            self.agents,
            self.planner,
            pbs_max_attempts=self.config.pbs_max_attempts,
            pbs_window_s=self.config.pbs_window_s,
            pbs_state=self._pbs_state,
        )
        if pre is not None:
            post = {
                aid: (
                    tuple(self.by_id[aid].route),
                    tuple(tuple(f) for f in self.by_id[aid].fragments),
                )
                for aid in self.id_order
            }
            if len(self._memo) >= 16:
                self._memo.pop(next(iter(self._memo)))
            self._memo[pre] = post
        self._unfreeze(pre)

    def _unfreeze(self, memo_key) -> None:
        """Liveness valve for position-induced gridlock.

        Parked robots can cut a sparse map so thoroughly that some or
        all agents cannot route; the planners are deterministic and the
        blockers never move on their own, so replanning alone would
        repeat the failure forever. Two escalation levels:

        * frozen fleet (nobody moving, every goal-holding agent
          planless): rescues are handed out immediately, and when not
          even a rescue exists the jam is mutual, so a rotating pick
          retreats one step into open space and successive activations
          loosen the pack from different sides.
        * starvation (an agent has sat planless with a goal for six
          fallback periods while the rest of the fleet kept moving,
          e.g. parked robots sealing off a pocket of the map): the
          starved agents alone are rescued.

        A rescue is the shortest route to a reachable node strictly
        nearer the goal, planned with every other robot's position and
        every outstanding route blocked. It is therefore node-disjoint
        from everything parked or in flight and cannot introduce a
        collision before the next planning instance supersedes it.
        """
        holders = [a for aid in self.id_order if (a := self.by_id[aid]).goal]
        for aid in list(self._starved_since):
            a = self.by_id.get(aid)
            if a is None or a.goal is None or self._executable_plan(a) is not None:
                del self._starved_since[aid]
        starved = [
            a
            for a in holders
            if a.edge_progress is None and self._executable_plan(a) is None
        ]
        for a in starved:
            self._starved_since.setdefault(a.id, self.now)
        frozen = (
            bool(holders)
            and len(starved) == len(holders)
            and not any(a.edge_progress is not None for a in self.agents)
        )
        if frozen:
            pool = starved
        else:
            wait = _STARVE_PERIODS * self.config.fallback_period_s
            pool = [
                a for a in starved if self.now - self._starved_since[a.id] >= wait
            ]
        if not pool:
            return
        if memo_key is not None:
            # states that trip the valve must re-enter it, not replay plans
            self._memo.pop(memo_key, None)
        rescued = False
        for agent in pool:
            outstanding: set[str] = set()
            for o in self.agents:
                if o is agent:
                    continue
                outstanding.update(o.route)
                for f in o.fragments:
                    outstanding.update(f)
            route = self._approach_route(agent, outstanding)
            if route is None:
                continue
            agent.clear_plan()
            agent.route = list(route)
            if self.planner.kind == "fp":
                agent.fragments = [list(route)]
            rescued = True
        if frozen and not rescued:
            agent, step = self._retreat_step(holders)
            if step is None:
                return
            agent.clear_plan()
            agent.route = list(step)
            if self.planner.kind == "fp":
                agent.fragments = [list(step)]

    def _approach_route(self, agent: Agent, claimed=frozenset()) -> list[str] | None:
        """Shortest blocked-map route to the reachable node strictly
        nearest the goal (by unblocked distance); None when every
        reachable node is no closer than where the agent stands.
        `claimed` adds nodes already promised to other rescue routes."""
        perm = topomap.permissible_subgraph(self.topo, agent.footprint)
        s = agent.current_node
        if not perm.has_node(s) or not perm.has_node(agent.goal):
            return None
        d_goal = _dijkstra_from(perm, agent.goal)
        blocked = occupied_nodes(a for a in self.agents if a is not agent)
        blocked |= set(claimed)
        best: tuple[float, float, str] | None = None
        dist = {s: 0.0}
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            du = d_goal.get(u)
            if u != s and du is not None and du < d_goal.get(s, math.inf):
                cand = (du, d, u)
                if best is None or cand < best:
                    best = cand
            for e in perm.out_edges(u):
                v = e.to_node
                if v in blocked:
                    continue
                nd = d + e.length
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        if best is None:
            return None
        return topomap.route_search(perm, s, best[2], blocked=blocked)

    def _retreat_step(self, holders) -> tuple[Agent | None, list[str] | None]:
        """One-step retreat for a mutually jammed pack: the next agent in
        rotation that has a free neighbour steps into the one opening the
        largest free region (ties: nearer its goal, then node id)."""
        cands = []
        for agent in holders:
            perm = topomap.permissible_subgraph(self.topo, agent.footprint)
            if not perm.has_node(agent.current_node):
                continue
            blocked = occupied_nodes(a for a in self.agents if a is not agent)
            free = [
                e.to_node
                for e in perm.out_edges(agent.current_node)
                if e.to_node not in blocked
            ]
            if free:
                cands.append((agent, perm, blocked, free))
        if not cands:
            return None, None
        agent, perm, blocked, free = cands[self._rescue_round % len(cands)]
        self._rescue_round += 1
        d_goal = _dijkstra_from(perm, agent.goal)
        scored = []
        for v in free:
            seen = {agent.current_node, v}
            stack = [v]
            while stack:
                u = stack.pop()
                for e in perm.out_edges(u):
                    w = e.to_node
                    if w not in seen and w not in blocked:
                        seen.add(w)
                        stack.append(w)
            scored.append((-len(seen), d_goal.get(v, math.inf), v))
        scored.sort()
        return agent, [agent.current_node, scored[0][2]]

    # --- motion -------------------------------------------------------------

    def _executable_plan(self, agent: Agent) -> list[str] | None:
        plan = agent.plan_nodes()
        if len(plan) >= 2 and plan[0] == agent.current_node:
            return plan
        return None

    def _try_depart(self, agent: Agent) -> bool:
        if agent.edge_progress is not None:
            return False
        plan = self._executable_plan(agent)
        if plan is None:
            return False
        edge = self.topo.edge(plan[0], plan[1])
        if self._check:
            for oid in self.id_order:
                other = self.by_id[oid]
                if other is agent or other.edge_progress is None:
                    continue
                oe = other.edge_progress[0]
                pair = tuple(sorted((agent.id, other.id)))
                if (oe.from_node, oe.to_node) == (edge.from_node, edge.to_node):
                    self._log_collision("edge", pair, (edge.from_node, edge.to_node))
                elif (oe.from_node, oe.to_node) == (edge.to_node, edge.from_node):
                    self._log_collision(
                        "crossing", pair, (edge.from_node, edge.to_node)
                    )
        if agent.fragments:
            agent.fragments[0].pop(0)
        if agent.route:
            agent.route.pop(0)
        agent.edge_progress = (edge, 0.0)
        self.depart_time[agent.id] = self.now
        self.last_progress = self.now
        heapq.heappush(
            self.heap,
            (self.now + edge.length / _eff_speed(edge, agent), _RANK_ARRIVAL, agent.id),
        )
        return True

    def _on_arrival(self, agent: Agent) -> bool:
        """Returns True when this arrival requires a planning instance
        (fragment/route completion or a task completion + respawn)."""
        edge = agent.edge_progress[0]
        v = edge.to_node
        agent.current_node = v
        agent.edge_progress = None
        del self.depart_time[agent.id]
        self.last_progress = self.now
        task = self.active_task.get(agent.id)
        if task is not None:
            task.d_exec += edge.length
        if self._check:
            for oid in self.id_order:
                other = self.by_id[oid]
                if (
                    other is not agent
                    and other.edge_progress is None
                    and other.current_node == v
                ):
                    self._log_collision(
                        "node", tuple(sorted((agent.id, other.id))), v
                    )
        plan = agent.plan_nodes()
        if plan and plan[0] != v:
            raise RuntimeError(f"plan desync for {agent.id}: {plan[0]} != {v}")
        if v == agent.goal:
            agent.clear_plan()
            self._complete_task(agent)
            return True
        if len(plan) == 1:
            # executable fragment (or a route cut short) completed off-goal
            if agent.fragments:
                agent.fragments.pop(0)
                if agent.route:
                    agent.route.pop(0)
            else:
                agent.route = []
            return True
        if not plan:
            # a failed replan cleared the plan mid-flight; landing with
            # nothing to execute is a planning event, not a silent park
            return True
        return False

    def _log_collision(self, kind: str, pair: tuple[str, str], where) -> None:
        self.collisions.append(CollisionEvent(self.now, kind, pair, where))

    # --- ticks ----------------------------------------------------------------

    def _on_tick(self) -> bool:
        need = False
        for aid in self.id_order:
            a = self.by_id[aid]
            if a.goal is None and aid not in self.active_task:
                if self.spawn_task(a) is not None:
                    need = True
        for aid in self.id_order:
            a = self.by_id[aid]
            if (
                a.goal is not None
                and a.edge_progress is None
                and self._executable_plan(a) is None
            ):
                need = True
                break
        stall_window = 10 * self.config.fallback_period_s
        if self.now - self.last_progress >= stall_window:
            self.stalls += 1
            self.last_progress = self.now
        return need

    def _schedule_tick(self) -> None:
        self._tick_index += 1
        t = self._tick_index * self.config.fallback_period_s
        if t <= self.config.duration:
            heapq.heappush(self.heap, (t, _RANK_TICK, ""))

    # --- main loop --------------------------------------------------------------

    def advance_motion(self, until: float) -> None:
        """Process event batches in time order up to `until`."""
        while self.heap and self.heap[0][0] <= until:
            t = self.heap[0][0]
            self.now = t
            need_instance = False
            while self.heap and self.heap[0][0] == t:
                _, rank, aid = heapq.heappop(self.heap)
                if rank == _RANK_ARRIVAL:
                    if self._on_arrival(self.by_id[aid]):
                        need_instance = True
                else:
                    if self._on_tick():
                        need_instance = True
                    self._schedule_tick()
            if need_instance:
                self.planning_instance()
            for aid in self.id_order:
                self._try_depart(self.by_id[aid])

    def run(self) -> TrialResult:
        wall0 = _time.perf_counter()
        for aid in self.id_order:
            self.spawn_task(self.by_id[aid])
        self.planning_instance()
        for aid in self.id_order:
            self._try_depart(self.by_id[aid])
        self._schedule_tick()
        self.advance_motion(self.config.duration)
        cfg = asdict(self.config)
        result = TrialResult(
            trial_id=self.config.trial_id(),
            planner=self.config.planner,
            fleet_size=len(self.agents),
            seed=self.config.seed,
            sim_s=self.config.duration,
            tasks=self.tasks,
            collisions=self.collisions,
            stalls=self.stalls,
            wall_s=_time.perf_counter() - wall0,
            failed=bool(self.collisions) and self.config.strict and self._check,
            config=cfg,
        )
        return result


def run_trial(config: TrialConfig, topo: TopoMap | None = None) -> TrialResult:
    """Run one lifelong trial; fully deterministic for a fixed config."""
    return Simulation(config, topo=topo).run()
