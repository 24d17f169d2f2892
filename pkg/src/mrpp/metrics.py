"""Efficiency and throughput metrics plus deterministic CSV emission.

POE (path optimisation efficiency) of a task is d_exec / d_opt, the
executed distance over the optimal distance with no other agents
present (1.0 = optimal, larger = worse). poe_task averages the
per-task ratios; poe_avg is distance-weighted: total executed over
total optimal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "TrialResult",
    "SweepSummary",
    "poe_i",
    "poe_task",
    "poe_avg",
    "relative_throughput",
    "TASK_CSV_HEADER",
    "TRIAL_CSV_HEADER",
    "task_csv_lines",
    "trial_csv_line",
]


@dataclass
class TrialResult:
    trial_id: str
    planner: str
    fleet_size: int
    seed: int
    sim_s: float
    tasks: list = field(default_factory=list)
    collisions: list = field(default_factory=list)
    stalls: int = 0
    wall_s: float = 0.0
    failed: bool = False  # strict-mode collision failure
    config: dict = field(default_factory=dict)

    @property
    def completed_tasks(self) -> list:
        return [t for t in self.tasks if t.end_time is not None]

    @property
    def tasks_completed(self) -> int:
        return len(self.completed_tasks)


@dataclass
class SweepSummary:
    """One row per trial, keyed by (planner, fleet_size, seed)."""

    rows: dict = field(default_factory=dict)

    def add(self, r: TrialResult) -> None:
        self.rows[(r.planner, r.fleet_size, r.seed)] = {
            "tasks_completed": r.tasks_completed,
            "poe_task": poe_task(r.completed_tasks),
            "poe_avg": poe_avg(r.completed_tasks),
            "collisions": len(r.collisions),
            "stalls": r.stalls,
        }


def poe_i(d_exec: float, d_opt: float) -> float:
    if d_opt <= 0:
        raise ValueError("poe undefined for non-positive d_opt")
    return d_exec / d_opt


def _usable(tasks):
    return [t for t in tasks if t.end_time is not None and t.d_opt > 0]


def poe_task(tasks) -> float | None:
    """Unweighted mean of per-task POE ratios; None when no tasks."""
    done = _usable(tasks)
    if not done:
        return None
    return sum(poe_i(t.d_exec, t.d_opt) for t in done) / len(done)


def poe_avg(tasks) -> float | None:
    """Distance-weighted POE: total executed over total optimal."""
    done = _usable(tasks)
    if not done:
        return None
    return sum(t.d_exec for t in done) / sum(t.d_opt for t in done)


def relative_throughput(planner_tasks: int, naive_tasks: int) -> float | None:
    """Throughput as a percentage of the matched naive trial."""
    if naive_tasks <= 0:
        return None
    return 100.0 * planner_tasks / naive_tasks


# --- CSV emission ------------------------------------------------------------

TASK_CSV_HEADER = (
    "trial_id,planner,fleet,seed,task_id,agent,start_s,end_s,d_opt_m,d_exec_m,poe_i"
)
TRIAL_CSV_HEADER = (
    "trial_id,planner,fleet,seed,tasks_completed,poe_task,poe_avg,"
    "collisions,stalls,sim_s,wall_s"
)


def _f(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def task_csv_lines(result: TrialResult) -> list[str]:
    """Per-task rows (completed tasks only; in-flight tasks contribute to
    no metric). Fixed 6-decimal formatting keeps output byte-stable."""
    lines = []
    for t in result.completed_tasks:
        lines.append(
            ",".join(
                (
                    result.trial_id,
                    result.planner,
                    str(result.fleet_size),
                    str(result.seed),
                    str(t.id),
                    t.agent,
                    _f(t.start_time),
                    _f(t.end_time),
                    _f(t.d_opt),
                    _f(t.d_exec),
                    _f(poe_i(t.d_exec, t.d_opt)),
                )
            )
        )
    return lines


def trial_csv_line(result: TrialResult) -> str:
    done = result.completed_tasks
    return ",".join(
        (
            result.trial_id,
            result.planner,
            str(result.fleet_size),
            str(result.seed),
            str(result.tasks_completed),
            _f(poe_task(done)),
            _f(poe_avg(done)),
            str(len(result.collisions)),
            str(result.stalls),
            _f(result.sim_s),
            _f(result.wall_s),
        )
    )
