"""Multi-robot path planning and lifelong-trial simulation on
corridor-dominated topological maps."""

from ._kernel import BACKEND
from .fleet import Agent, FleetError, Task, assign_task, loads_fleet, occupied_nodes
from .mapgen import PolytunnelParams, generate_polytunnel, generate_reference_scale
from .metrics import TrialResult, poe_avg, poe_i, poe_task, relative_throughput
from .planners import PlannerError, PlannerKind, find_routes
from .simulator import TrialConfig, detect_collisions, run_trial
from .topomap import (
    MapError,
    TopoEdge,
    TopoMap,
    TopoNode,
    corridor_stats,
    load_map,
    loads_map,
    route_search,
    save_map,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "Agent",
    "FleetError",
    "Task",
    "assign_task",
    "loads_fleet",
    "occupied_nodes",
    "PolytunnelParams",
    "generate_polytunnel",
    "generate_reference_scale",
    "TrialResult",
    "poe_avg",
    "poe_i",
    "poe_task",
    "relative_throughput",
    "PlannerError",
    "PlannerKind",
    "find_routes",
    "TrialConfig",
    "detect_collisions",
    "run_trial",
    "MapError",
    "TopoEdge",
    "TopoMap",
    "TopoNode",
    "corridor_stats",
    "load_map",
    "loads_map",
    "route_search",
    "save_map",
]
