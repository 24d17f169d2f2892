"""Agent state, node occupancy, task assignment, and fleet configs."""

from __future__ import annotations

import json
import math

import pytest

from mrpp import Agent, FleetError, assign_task, loads_fleet, occupied_nodes
from mrpp.fleet import TaskRejected, _auto_start_nodes

from .conftest import build_map, line_map, make_agent, mini_tunnel_map


# --- agent state --------------------------------------------------------------


def test_agent_parameter_validation():
    with pytest.raises(FleetError):
        Agent(id="a", nominal_speed=0.0, footprint=0.5, current_node="A")
    with pytest.raises(FleetError):
        Agent(id="a", nominal_speed=1.0, footprint=-1.0, current_node="A")


def test_next_attainable_node():
    topo = line_map("ABC")
    a = make_agent("a", "A")
    assert a.next_attainable_node() == "A"
    a.edge_progress = (topo.edge("A", "B"), 0.4)
    assert a.next_attainable_node() == "B"


def test_plan_nodes_prefers_first_fragment():
    a = make_agent("a", "A", route=["A", "B", "C"], fragments=[["A", "B"], ["C"]])
    assert a.plan_nodes() == ["A", "B"]
    a.fragments = []
    assert a.plan_nodes() == ["A", "B", "C"]


def test_clear_plan():
    a = make_agent("a", "A", route=["A", "B"], fragments=[["A", "B"]])
    a.clear_plan()
    assert a.route == [] and a.fragments == []


# --- occupancy ------------------------------------------------------------------


def test_occupied_positions_stationary_and_moving():
    topo = line_map("ABC")
    standing = make_agent("a", "A")
    mover = make_agent("b", "B")
    mover.edge_progress = (topo.edge("B", "C"), 0.5)
    held = occupied_nodes([standing, mover])
    # the mover holds its committed destination; the node being vacated
    # is free for others
    assert held == {"A", "C"}


def test_occupied_route_mode_includes_plans():
    topo = line_map("ABCDE")
    a = make_agent("a", "A", route=["A", "B", "C"])
    b = make_agent("b", "E", fragments=[["E", "D"]])
    b.edge_progress = (topo.edge("E", "D"), 0.1)
    held = occupied_nodes([a, b], mode="route")
    assert held == {"A", "B", "C", "D", "E"}


def test_occupied_subset_filter():
    a = make_agent("a", "A")
    b = make_agent("b", "B")
    assert occupied_nodes([a, b], subset=["a"]) == {"A"}
    assert occupied_nodes([a, b], subset=[b]) == {"B"}
    with pytest.raises(ValueError):
        occupied_nodes([a, b], mode="everything")


# --- task assignment --------------------------------------------------------------


def test_assign_task_sets_goal_and_optimum():
    topo = line_map("ABCD", length=2.0)
    a = make_agent("a", "A")
    task = assign_task(a, "D", 12.5, topo)
    assert a.goal == "D"
    assert a.task_start_time == 12.5
    assert a.optimal_route_len == 6.0
    assert a.route == [] and a.fragments == []
    assert task.agent == "a" and task.goal == "D"
    assert task.d_opt == 6.0 and task.d_exec == 0.0
    assert task.end_time is None


def test_assign_task_rejects_unreachable_goal():
    topo = build_map([("A", "B", 1.0)])  # no way back
    a = make_agent("a", "B")
    with pytest.raises(TaskRejected):
        assign_task(a, "A", 0.0, topo)
    with pytest.raises(TaskRejected):
        assign_task(a, "Z", 0.0, topo)


def test_assign_task_respects_footprint():
    topo = build_map([("A", "B", 1.0, 1.0, 0.6), ("B", "A", 1.0, 1.0, 0.6)])
    wide = make_agent("a", "A", footprint=0.9)
    with pytest.raises(TaskRejected):
        assign_task(wide, "B", 0.0, topo)
    slim = make_agent("b", "A", footprint=0.5)
    assert assign_task(slim, "B", 0.0, topo).d_opt == 1.0


def test_assign_task_from_mid_edge_measures_from_edge_head():
    topo = line_map("ABCD")
    a = make_agent("a", "A")
    a.edge_progress = (topo.edge("A", "B"), 0.3)
    task = assign_task(a, "D", 0.0, topo)
    assert task.d_opt == 2.0  # B -> C -> D


# --- fleet configuration -----------------------------------------------------------


def test_loads_fleet_explicit():
    topo = line_map("ABCDE")
    doc = {
        "agents": [
            {"id": "r1", "nominal_speed": 1.5, "footprint": 0.7, "start_node": "A"},
            {"id": "r2", "nominal_speed": 1.0, "footprint": 0.7, "start_node": "C"},
        ]
    }
    agents = loads_fleet(json.dumps(doc), topo)
    assert [a.id for a in agents] == ["r1", "r2"]
    assert agents[0].nominal_speed == 1.5
    assert agents[1].current_node == "C"


def test_loads_fleet_shorthand_auto_spread():
    topo = mini_tunnel_map(1, 4, 2)  # 8 header nodes
    doc = {"count": 4, "nominal_speed": 1.0, "footprint": 0.8, "start_nodes": "auto"}
    agents = loads_fleet(json.dumps(doc), topo)
    assert [a.id for a in agents] == ["a00", "a01", "a02", "a03"]
    starts = [a.current_node for a in agents]
    assert len(set(starts)) == 4
    assert all(s.startswith(("h0_", "h1_")) for s in starts)


def test_auto_start_nodes_fall_back_to_all_nodes():
    topo = line_map("ABCDE")
    assert _auto_start_nodes(topo, 2) == ["A", "C"]
    with pytest.raises(FleetError):
        _auto_start_nodes(topo, 6)


@pytest.mark.parametrize(
    "doc",
    [
        {"agents": [{"id": "x", "nominal_speed": 1.0, "footprint": 0.5}]},
        {"agents": [], "count": 2},
        {"count": 2, "nominal_speed": 1.0, "footprint": 0.5, "start_nodes": "A,B"},
        {"count": 2, "nominal_speed": 1.0},
        {"something": "else"},
    ],
)
def test_loads_fleet_rejects_malformed_configs(doc):
    topo = line_map("ABCDE")
    with pytest.raises(FleetError):
        loads_fleet(json.dumps(doc), topo)


def test_loads_fleet_rejects_bad_values():
    topo = line_map("ABCDE")
    dup = {
        "agents": [
            {"id": "r", "nominal_speed": 1.0, "footprint": 0.5, "start_node": "A"},
            {"id": "r", "nominal_speed": 1.0, "footprint": 0.5, "start_node": "B"},
        ]
    }
    with pytest.raises(FleetError):
        loads_fleet(json.dumps(dup), topo)
    unknown_start = {
        "agents": [
            {"id": "r", "nominal_speed": 1.0, "footprint": 0.5, "start_node": "Z"}
        ]
    }
    with pytest.raises(FleetError):
        loads_fleet(json.dumps(unknown_start), topo)
    inf_speed = {
        "agents": [
            {
                "id": "r",
                "nominal_speed": math.inf,
                "footprint": 0.5,
                "start_node": "A",
            }
        ]
    }
    with pytest.raises(FleetError):
        loads_fleet(json.dumps(inf_speed), topo)
    with pytest.raises(FleetError):
        loads_fleet("{not json", topo)
    with pytest.raises(FleetError):
        loads_fleet("[1]", topo)
    zero_count = {
        "count": 0,
        "nominal_speed": 1.0,
        "footprint": 0.5,
        "start_nodes": "auto",
    }
    with pytest.raises(FleetError):
        loads_fleet(json.dumps(zero_count), topo)
