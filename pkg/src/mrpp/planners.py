"""The five planner families behind one interface: Naive, Prioritised
(three heuristics), PBS, and the Fragment planner (space-only /
space-time).

All planners are pure functions of (fleet snapshot, map, config): they
mutate only agent route/fragment state, never positions, and two runs
with identical inputs produce identical outputs.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

from .baseplanner import (
    PriorityHeuristic,
    get_groups,
    get_priorities,
    optimal_remaining,
    route_for_active,
)
from .fleet import occupied_nodes
from .topomap import TopoMap, route_distance

__all__ = [
    "PlannerError",
    "PlannerKind",
    "PLANNER_STRINGS",
    "CriticalPointIndex",
    "PbsState",
    "SpaceTimeConflict",
    "naive_find_routes",
    "pp_find_routes",
    "pbs_find_routes",
    "pbs_get_conflicts",
    "fp_find_routes",
    "fp_get_critical_points",
    "fp_assign_fragments",
    "fp_build_route_fragments",
    "find_routes",
]

PLANNER_STRINGS = (
    "naive",
    "pp:name",
    "pp:shortest_route",
    "pp:task_start_time",
    "pbs",
    "fp:space_only",
    "fp:space_time",
)

# CLI heuristic names -> PriorityHeuristic kinds
_PP_HEURISTICS = {
    "name": "name",
    "shortest_route": "closest_first",
    "task_start_time": "time_since_task_start",
}


class PlannerError(RuntimeError):
    """Internal planner invariant broken (indicates a bug, not bad input)."""


@dataclass(frozen=True)
class PlannerKind:
    kind: str  # naive | pp | pbs | fp
    variant: str | None = None

    @staticmethod
    def parse(text: str) -> "PlannerKind":
        if text == "naive":
            return PlannerKind("naive")
        if text == "pbs":
            return PlannerKind("pbs")
        if text.startswith("pp:"):
            variant = text[3:]
            if variant in _PP_HEURISTICS:
                return PlannerKind("pp", variant)
        if text.startswith("fp:"):
            variant = text[3:]
            if variant in ("space_only", "space_time"):
                return PlannerKind("fp", variant)
        raise ValueError(f"unknown planner {text!r} (choose from {PLANNER_STRINGS})")

    def __str__(self) -> str:
        return self.kind if self.variant is None else f"{self.kind}:{self.variant}"


# --- naive ------------------------------------------------------------------


def naive_find_routes(topo: TopoMap, agents) -> None:
    """Every goal-holding agent gets its individually optimal route on its
    permissible subgraph; other robots are ignored entirely."""
    groups = get_groups(agents)
    for a in groups.new_active + groups.active:
        route_for_active(topo, a, agents, map_mode="open")


# --- prioritised ------------------------------------------------------------


def pp_find_routes(topo: TopoMap, agents, heuristic: PriorityHeuristic) -> None:
    """Plan agents sequentially under a global priority order.

    Each agent is blocked by every occupied position (the node a mover
    is committed to arrive at, the standing node otherwise), the fresh
    routes of agents planned earlier this instance, and the stale routes
    of agents not yet planned. Failures go inactive and block only their
    position. Goals may target stale-route nodes but never positions or
    fresh-route nodes, so installed routes are pairwise node-disjoint
    and execution cannot collide.
    """
    groups = get_groups(agents)
    todo = groups.new_active + groups.active
    order = get_priorities(topo, todo, heuristic)
    by_id = {a.id: a for a in agents}
    positions = occupied_nodes(agents)
    fresh: set[str] = set()
    stale: dict[str, set[str]] = {a.id: set(a.plan_nodes()) for a in todo}
    pending = list(order)
    for aid in order:
        agent = by_id[aid]
        pending.remove(aid)
        blocking = positions | fresh
        for other in pending:
            blocking |= stale[other]
        hard = positions | fresh
        route = route_for_active(
            topo, agent, agents, blocking=blocking, hard_blocked=hard
        )
        if route is not None:
            fresh.update(route)


# --- pbs ---------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeConflict:
    """Two agents too close in time at a shared node (or an opposed /
    shared edge, reported at an endpoint)."""

    node: str
    agents: tuple[str, str]
    times: tuple[float, float]


def _arrival_schedule(topo, agent, route):
    """Entry and arrival times for each node along a route.

    Returns (nodes, enter, arrive): the agent starts the edge into
    route[k] at enter[k] and reaches the node at arrive[k]; a route
    whose first edge is already in progress starts with the remaining
    traversal time."""
    speed = agent.nominal_speed
    enter = [0.0]
    if agent.edge_progress is not None:
        edge, done = agent.edge_progress
        arrive = [(edge.length - done) / min(edge.speed_limit, speed)]
    else:
        arrive = [0.0]
    t = arrive[0]
    for u, v in zip(route, route[1:]):
        e = topo.edge(u, v)
        enter.append(t)
        t += e.length / min(e.speed_limit, speed)
        arrive.append(t)
    return route, enter, arrive


def pbs_get_conflicts(topo, agents_by_id, routes, window) -> list[SpaceTimeConflict]:
    """Space-time conflicts between installed routes.

    Two routes conflict at a shared node when their arrival times there
    are less than `window` seconds apart, and on an edge traversed in
    opposite directions when the traversal intervals overlap (reported
    at the lexicographically smaller endpoint). Same-node pairs take
    precedence: the swap check runs only for pairs with no node hit.
    """
    sched = {
        aid: _arrival_schedule(topo, agents_by_id[aid], route)
        for aid, route in routes.items()
    }
    ids = sorted(sched)
    out = []
    for i, a in enumerate(ids):
        na, ea, ta = sched[a]
        pos_a = {v: k for k, v in enumerate(na)}
        opp_a = {(v, u): k + 1 for k, (u, v) in enumerate(zip(na, na[1:]))}
        for b in ids[i + 1 :]:
            nb, eb, tb = sched[b]
            hit = False
            for kb, v in enumerate(nb):
                ka = pos_a.get(v)
                if ka is None:
                    continue
                if abs(ta[ka] - tb[kb]) < window:
                    out.append(SpaceTimeConflict(v, (a, b), (ta[ka], tb[kb])))
                    hit = True
            if hit:
                continue
            for kb, (u, v) in enumerate(zip(nb, nb[1:])):
                ka = opp_a.get((u, v))
                if ka is None:
                    continue
                if ea[ka] < tb[kb + 1] and eb[kb + 1] < ta[ka]:
                    out.append(
                        SpaceTimeConflict(min(u, v), (a, b), (ta[ka], tb[kb + 1]))
                    )
    out.sort(key=lambda c: (min(c.times), c.node, c.agents))
    return out


def _ruleset_cyclic(rules) -> bool:
    succ: dict[str, list[str]] = {}
    for h, l in rules:
        succ.setdefault(h, []).append(l)
    seen: dict[str, int] = {}  # 1 = in stack, 2 = done

    def visit(x) -> bool:
        seen[x] = 1
        for y in succ.get(x, ()):
            s = seen.get(y)
            if s == 1 or (s is None and visit(y)):
                return True
        seen[x] = 2
        return False

    return any(visit(x) for x in sorted(succ) if x not in seen)


def _pbs_order(ids, rules) -> list[str]:
    """Topological order under the ruleset; base priorities are equal, so
    within a layer the smallest agent id plans first."""
    indeg = {x: 0 for x in ids}
    succ: dict[str, list[str]] = {x: [] for x in ids}
    for h, l in rules:
        if h in indeg and l in indeg:
            succ[h].append(l)
            indeg[l] += 1
    ready = [x for x in ids if indeg[x] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        x = heapq.heappop(ready)
        order.append(x)
        for y in succ[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                heapq.heappush(ready, y)
    if len(order) != len(ids):
        raise PlannerError("cyclic ruleset reached planning")
    return order


@dataclass
class PbsState:
    """Incumbent ruleset carried across planning instances.

    Each instance roots its candidate queue at the previous winner
    instead of the empty ruleset, so rules accumulated under old tasks
    keep constraining the order after the fleet has moved on and the
    installed ordering can lag the current contention pattern."""

    incumbent: frozenset = frozenset()


def _pbs_ancestors(ids, rules) -> dict[str, set[str]]:
    preds: dict[str, set[str]] = {x: set() for x in ids}
    for h, l in rules:
        if l in preds:
            preds[l].add(h)
    anc: dict[str, set[str]] = {}

    def visit(x) -> set[str]:
        if x in anc:
            return anc[x]
        acc = set()
        anc[x] = acc  # rules are acyclic; safe to publish early
        for p in preds[x]:
            acc.add(p)
            acc |= visit(p)
        return acc

    for x in ids:
        visit(x)
    return anc


def pbs_find_routes(
    topo: TopoMap,
    agents,
    max_attempts: int = 50,
    window: float = 10.0,
    state: PbsState | None = None,
    stats: list | None = None,
) -> None:
    """Priority-based search over partial orderings.

    Each attempt evaluates one candidate ruleset: agents plan in
    ruleset-topological order (smallest id first within a layer), each
    blocked by all positions plus every route planned earlier in that
    order.
    The first space-time conflict spawns the two one-rule extensions
    (a before b / b before a); already-seen or cyclic rulesets are
    dropped. Stops at a conflict-free, failure-free attempt, an empty
    queue, or the attempt cap; the best attempt seen (fewest conflicts,
    then fewest failures, then earliest) is installed, and the losing
    party of each surviving conflict (ruleset order decides, else later
    arrival at the contested node) is cleared so it holds position
    (positions are always blocked, so a cleared agent cannot be
    collided with).

    With no carried `state` the search starts fresh from the empty
    ruleset. With one, it starts from the incumbent ruleset installed
    by the previous instance and the winner is carried forward.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    groups = get_groups(agents)
    todo = groups.new_active + groups.active
    if not todo:
        return
    ids = sorted(a.id for a in todo)
    by_id = {a.id: a for a in agents}
    positions = occupied_nodes(agents)

    if state is None:
        state = PbsState()
    queue: deque[frozenset] = deque([state.incumbent])
    seen = {state.incumbent}
    best = None  # (n_conflicts, n_fails, attempt_ix, rules, routes, conflicts)
    attempt = 0
    while queue and attempt < max_attempts:
        rules = queue.popleft()
        attempt += 1
        order = _pbs_order(ids, rules)
        routes: dict[str, list[str]] = {}
        fails = 0
        blocking = set(positions)
        for aid in order:
            agent = by_id[aid]
            route = route_for_active(
                topo, agent, agents, blocking=blocking, hard_blocked=positions
            )
            if route is None:
                fails += 1
            else:
                routes[aid] = route
                blocking.update(route)
        conflicts = pbs_get_conflicts(topo, by_id, routes, window)
        key = (len(conflicts), fails, attempt)
        if best is None or key < best[:3]:
            best = (len(conflicts), fails, attempt, rules, routes, conflicts)
        if not conflicts and fails == 0:
            break
        if conflicts:
            a, b = conflicts[0].agents
            for rule in ((a, b), (b, a)):
                cand = rules | {rule}
                if cand not in seen and not _ruleset_cyclic(cand):
                    seen.add(cand)
                    queue.append(cand)

    n_conf, n_fails, _, best_rules, routes, conflicts = best
    state.incumbent = best_rules
    higher = _pbs_ancestors(ids, best_rules)
    dropped = set()
    for c in conflicts:
        a, b = c.agents
        if a in higher.get(b, ()):
            dropped.add(b)
        elif b in higher.get(a, ()):
            dropped.add(a)
        else:
            # unordered pair: the later arrival at the contested node yields
            ta, tb = c.times
            dropped.add(b if (tb, b) > (ta, a) else a)
    for aid in ids:
        agent = by_id[aid]
        agent.clear_plan()
        if aid in routes and aid not in dropped:
            agent.route = list(routes[aid])
    if stats is not None:
        stats.append(
            {
                "agents": len(ids),
                "attempts": attempt,
                "accepted": n_conf == 0 and n_fails == 0,
                "conflicts": n_conf,
                "fails": n_fails,
                "dropped": len(dropped),
            }
        )


# --- fragment planner ---------------------------------------------------------


@dataclass
class CriticalPointIndex:
    """Nodes contended by more than one route, viewed both ways: per
    route (keyed by agent id) and per node."""

    cp_by_route: dict[str, set[str]]
    agents_by_cp: dict[str, set[str]]


def fp_get_critical_points(routes: dict[str, list[str]]) -> CriticalPointIndex:
    """All-pairs route intersections."""
    cp_by_route: dict[str, set[str]] = {aid: set() for aid in routes}
    agents_by_cp: dict[str, set[str]] = {}
    ids = sorted(routes)
    node_sets = {aid: set(routes[aid]) for aid in ids}
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            shared = node_sets[a] & node_sets[b]
            for v in shared:
                cp_by_route[a].add(v)
                cp_by_route[b].add(v)
                agents_by_cp.setdefault(v, set()).update((a, b))
    return CriticalPointIndex(cp_by_route=cp_by_route, agents_by_cp=agents_by_cp)


def fp_assign_fragments(
    topo: TopoMap, by_id, cpi: CriticalPointIndex, routes, pi: str = "distance"
) -> dict[str, list[list[str]]]:
    """Split each route into fragments at contested nodes.

    Ownership of a contested node goes to the head of the priority
    order among its contenders (distance-to-node for the space-only
    variant, time-to-node for space-time). Walking its route, an agent
    keeps appending until it hits a contested node it does not own (or
    that is already claimed); there the open partial closes, the node
    becomes a final single-node fragment, and the rest of the route is
    deferred to later planning instances.
    """
    if pi not in ("distance", "time"):
        raise ValueError(f"unknown ownership metric {pi!r}")
    h_kind = "distance_to_node" if pi == "distance" else "time_to_node"
    owner: dict[str, str] = {}
    for v, contenders in cpi.agents_by_cp.items():
        h = PriorityHeuristic(kind=h_kind, target=v)
        ranked = get_priorities(topo, [by_id[x] for x in sorted(contenders)], h)
        owner[v] = ranked[0]
    claimed: set[str] = set()
    out: dict[str, list[list[str]]] = {}
    for aid in sorted(routes):
        critical = cpi.cp_by_route[aid]
        frags: list[list[str]] = []
        open_part: list[str] = []
        for v in routes[aid]:
            if v not in critical:
                open_part.append(v)
                continue
            if owner[v] == aid and v not in claimed:
                open_part.append(v)
                claimed.add(v)
                continue
            if open_part:
                frags.append(open_part)
                open_part = []
            frags.append([v])
            break
        if open_part:
            frags.append(open_part)
        out[aid] = frags
    return out


def fp_build_route_fragments(topo: TopoMap, frags: list[list[str]]) -> list[list[str]]:
    """Validate fragment adjacency (within fragments and across the
    connector between consecutive fragments). Returns the fragments
    unchanged; a broken step means the assignment above has a bug."""
    flat: list[str] = []
    for f in frags:
        if not f:
            raise PlannerError("empty fragment")
        flat.extend(f)
    for u, v in zip(flat, flat[1:]):
        try:
            topo.edge(u, v)
        except Exception as exc:
            raise PlannerError(f"fragment adjacency broken at {u!r}->{v!r}") from exc
    return frags


def _fp_keepable_route(topo: TopoMap, agent, positions) -> list[str] | None:
    """The agent's remaining route when it is still walkable today:
    starts at the agent's own node/head, ends at its goal, and touches
    no node another agent occupies. Only an untruncated plan (a single
    executable fragment reaching the goal) qualifies; an agent that was
    stopped short at a contested node re-searches so it can discover a
    detour instead of restating the same claim forever. None means the
    route must be re-searched."""
    frags = agent.fragments
    if len(frags) != 1 or not frags[0] or frags[0][-1] != agent.goal:
        return None
    route = list(agent.route)
    if route and route[0] != agent.current_node and agent.edge_progress is None:
        route = [agent.current_node] + route
    if len(route) < 2 or route[-1] != agent.goal:
        return None
    own = {route[0], agent.current_node}
    if any(v in positions and v not in own for v in route):
        return None
    return route


def fp_find_routes(
    topo: TopoMap, agents, variant: str = "space_only", detour_cap: float = 1.5
) -> None:
    """Resource-centric planning: route everyone against positions only,
    arbitrate contested nodes, and let each agent execute only its
    first fragment; arbitration is recomputed at the next instance.

    An active agent keeps its remaining route while that route stays
    clear of other robots (it is then still a valid walk on today's
    filtered map) and no shorter one exists; re-searching blindly every
    instance would trade it for a fresh detour around whoever parked
    nearby in the meantime, while keeping blindly would preserve stale
    detours around robots long gone. Comparing the two each instance
    avoids both kinds of accumulated overhead.

    Routes longer than `detour_cap` times the agent's unblocked optimum
    are declined: the robots in the way will move within seconds, so a
    huge swing around them costs more travel than briefly waiting (the
    simulator's liveness valve covers blockers that never move)."""
    if variant not in ("space_only", "space_time"):
        raise ValueError(f"unknown fp variant {variant!r}")
    groups = get_groups(agents)
    by_id = {a.id: a for a in agents}
    positions = occupied_nodes(agents)
    routes: dict[str, list[str]] = {}
    for a in groups.new_active + groups.active:
        kept = _fp_keepable_route(topo, a, positions)
        fresh = route_for_active(topo, a, agents, blocking=positions)
        if kept is not None and (
            fresh is None
            or route_distance(topo, kept) <= route_distance(topo, fresh)
        ):
            best = kept
        else:
            best = fresh
        if best is None:
            continue
        straight = optimal_remaining(topo, a)
        if (
            straight > 0
            and math.isfinite(straight)
            and route_distance(topo, best) > detour_cap * straight
        ):
            a.clear_plan()
            continue
        a.route = list(best)
        routes[a.id] = best
    cpi = fp_get_critical_points(routes)
    pi = "distance" if variant == "space_only" else "time"
    frag_map = fp_assign_fragments(topo, by_id, cpi, routes, pi)
    for aid, frags in frag_map.items():
        agent = by_id[aid]
        agent.fragments = fp_build_route_fragments(topo, frags)
        # the full route survives even when the executable fragments stop
        # at a contested node, so the tail can be kept next instance
        agent.route = list(routes[aid])


# --- dispatcher ----------------------------------------------------------------


def find_routes(
    topo: TopoMap,
    agents,
    planner: PlannerKind,
    pbs_max_attempts: int = 50,
    pbs_window_s: float = 10.0,
    pbs_state: PbsState | None = None,
) -> None:
    """Run one planning instance with the selected planner."""
    if planner.kind == "naive":
        naive_find_routes(topo, agents)
    elif planner.kind == "pp":
        h = PriorityHeuristic(kind=_PP_HEURISTICS[planner.variant])
        pp_find_routes(topo, agents, h)
    elif planner.kind == "pbs":
        pbs_find_routes(topo, agents, pbs_max_attempts, pbs_window_s, state=pbs_state)
    elif planner.kind == "fp":
        fp_find_routes(topo, agents, planner.variant)
    else:
        raise ValueError(f"unknown planner kind {planner.kind!r}")
