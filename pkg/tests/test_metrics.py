"""Metric definitions and deterministic CSV output."""

from __future__ import annotations

import pytest

from mrpp.fleet import Task
from mrpp.metrics import (
    TASK_CSV_HEADER,
    TRIAL_CSV_HEADER,
    SweepSummary,
    TrialResult,
    poe_avg,
    poe_i,
    poe_task,
    relative_throughput,
    task_csv_lines,
    trial_csv_line,
)


def _task(tid, d_opt, d_exec, end=100.0, agent="a00", start=0.0):
    return Task(
        id=tid,
        agent=agent,
        goal="g",
        start_time=start,
        end_time=end,
        d_opt=d_opt,
        d_exec=d_exec,
    )


def test_poe_i():
    assert poe_i(12.0, 10.0) == 1.2
    assert poe_i(10.0, 10.0) == 1.0
    with pytest.raises(ValueError):
        poe_i(5.0, 0.0)
    with pytest.raises(ValueError):
        poe_i(5.0, -1.0)


def test_poe_task_and_poe_avg_weight_tasks_differently():
    # a short doubled task and a long optimal one: the unweighted mean
    # is pulled up by the short task, the distance-weighted one is not
    tasks = [_task(0, 1.0, 2.0), _task(1, 10.0, 10.0)]
    assert poe_task(tasks) == 1.5
    assert poe_avg(tasks) == 12.0 / 11.0


def test_poe_ignores_unusable_tasks():
    unfinished = _task(0, 5.0, 3.0)
    unfinished.end_time = None
    degenerate = _task(1, 0.0, 0.0)  # task that spawned at the agent
    good = _task(2, 4.0, 6.0)
    tasks = [unfinished, degenerate, good]
    assert poe_task(tasks) == 1.5
    assert poe_avg(tasks) == 1.5
    assert poe_task([unfinished, degenerate]) is None
    assert poe_avg([]) is None


def test_relative_throughput():
    assert relative_throughput(80, 100) == 80.0
    assert relative_throughput(110, 100) == 110.0
    assert relative_throughput(5, 0) is None


def test_trial_result_counts_completed_tasks():
    unfinished = _task(3, 2.0, 1.0)
    unfinished.end_time = None
    r = TrialResult(
        "x_f02_s00", "naive", 2, 0, sim_s=600.0,
        tasks=[_task(0, 1.0, 1.0), unfinished],
    )
    assert r.tasks_completed == 1
    assert [t.id for t in r.completed_tasks] == [0]


def test_sweep_summary_rows():
    r = TrialResult(
        "x_f02_s01", "pp:name", 2, 1, sim_s=600.0,
        tasks=[_task(0, 2.0, 3.0)], stalls=1,
    )
    s = SweepSummary()
    s.add(r)
    assert s.rows[("pp:name", 2, 1)] == {
        "tasks_completed": 1,
        "poe_task": 1.5,
        "poe_avg": 1.5,
        "collisions": 0,
        "stalls": 1,
    }


def test_task_csv_lines_exact():
    unfinished = _task(1, 2.0, 0.5)
    unfinished.end_time = None
    r = TrialResult(
        "naive_f02_s00", "naive", 2, 0, sim_s=600.0,
        tasks=[_task(0, 10.0, 10.0, end=11.0, start=1.0), unfinished],
    )
    lines = task_csv_lines(r)
    assert lines == [
        "naive_f02_s00,naive,2,0,0,a00,1.000000,11.000000,"
        "10.000000,10.000000,1.000000"
    ]
    assert len(lines[0].split(",")) == len(TASK_CSV_HEADER.split(","))


def test_trial_csv_line_exact():
    r = TrialResult(
        "naive_f02_s00", "naive", 2, 0, sim_s=600.0,
        tasks=[_task(0, 10.0, 10.0, end=11.0, start=1.0)],
        wall_s=2.5,
    )
    line = trial_csv_line(r)
    assert line == (
        "naive_f02_s00,naive,2,0,1,1.000000,1.000000,0,0,600.000000,2.500000"
    )
    assert len(line.split(",")) == len(TRIAL_CSV_HEADER.split(","))


def test_trial_csv_line_empty_metrics():
    r = TrialResult("pbs_f05_s02", "pbs", 5, 2, sim_s=60.0)
    line = trial_csv_line(r)
    assert line == "pbs_f05_s02,pbs,5,2,0,,,0,0,60.000000,0.000000"
