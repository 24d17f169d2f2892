"""Command-line entry point: map generation, single trials, sweeps, and
report/audit over sweep output directories.

Exit codes: 0 success, 1 usage/config error, 2 strict-mode collision
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import mapgen, metrics, simulator, topomap
from .fleet import FleetError
from .metrics import (
    TASK_CSV_HEADER,
    TRIAL_CSV_HEADER,
    poe_avg,
    poe_task,
    relative_throughput,
    task_csv_lines,
    trial_csv_line,
)
from .planners import PLANNER_STRINGS
from .simulator import TrialConfig, run_trial
from .topomap import MapError

__all__ = ["main"]


def _env_seed() -> int:
    return int(os.environ.get("MRPP_SEED", "0"))


def _parse_int_list(text: str) -> list[int]:
    """'5-10' -> [5..10]; '1,2,5' -> [1,2,5]."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("empty list")
    return out


# --- mapgen --------------------------------------------------------------------


def cmd_mapgen(args) -> int:
    if args.preset == "reference":
        topo = mapgen.generate_reference_scale()
    elif args.preset is not None:
        raise ValueError(f"unknown preset {args.preset!r}")
    else:
        params = mapgen.PolytunnelParams(
            n_tunnels=args.tunnels,
            rows_per_tunnel=args.rows,
            nodes_per_row=args.nodes_per_row,
            row_spacing=args.row_spacing,
            node_spacing=args.node_spacing,
            header_speed_limit=args.header_speed,
            row_speed_limit=args.row_speed,
            envelope=args.envelope,
            bidirectional_rows=not args.one_way_rows,
        )
        topo = mapgen.generate_polytunnel(params)
    topomap.save_map(topo, args.out)
    stats = topomap.corridor_stats(topo)
    print(
        f"wrote {args.out}: |V|={stats.node_count} |E|={stats.edge_count} "
        f"length={topo.total_edge_length():.1f}m frac_deg_le_2={stats.frac_deg_le_2:.3f}"
    )
    return 0


# --- run -------------------------------------------------------------------------


def _config_from_args(args) -> TrialConfig:
    base: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
        unknown = set(base) - set(TrialConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    overrides = {
        "map_source": args.map,
        "planner": args.planner,
        "duration": args.duration,
        "seed": args.seed,
        "fallback_period_s": args.fallback_period,
        "pbs_window_s": args.pbs_window,
        "pbs_max_attempts": args.pbs_max_attempts,
        "collision_check": args.collision_check,
        "strict": None if args.no_strict is False else False,
    }
    if args.fleet_config:
        with open(args.fleet_config, encoding="utf-8") as fh:
            overrides["fleet"] = json.load(fh)
    elif args.fleet is not None:
        overrides["fleet"] = args.fleet
    for key, val in overrides.items():
        if val is not None:
            base[key] = val
    if "seed" not in base:
        base["seed"] = _env_seed()
    return TrialConfig(**base)


def _write_trial_files(outdir: str, result) -> None:
    os.makedirs(outdir, exist_ok=True)
    tpath = os.path.join(outdir, f"tasks_{result.trial_id}.csv")
    with open(tpath, "w", encoding="utf-8") as fh:
        fh.write(TASK_CSV_HEADER + "\n")
        for line in task_csv_lines(result):
            fh.write(line + "\n")
    rpath = os.path.join(outdir, f"trial_{result.trial_id}.csv")
    with open(rpath, "w", encoding="utf-8") as fh:
        fh.write(TRIAL_CSV_HEADER + "\n")
        fh.write(trial_csv_line(result) + "\n")


def _summary_line(result) -> str:
    pt = poe_task(result.completed_tasks)
    pa = poe_avg(result.completed_tasks)
    return (
        f"{result.trial_id}: tasks={result.tasks_completed}"
        f" poe_task={'-' if pt is None else f'{pt:.4f}'}"
        f" poe_avg={'-' if pa is None else f'{pa:.4f}'}"
        f" collisions={len(result.collisions)} stalls={result.stalls}"
        f" wall={result.wall_s:.2f}s"
    )


def cmd_run(args) -> int:
    config = _config_from_args(args)
    result = run_trial(config)
    _write_trial_files(args.out, result)
    print(_summary_line(result))
    return 2 if result.failed else 0


# --- sweep -------------------------------------------------------------------------


def _run_trial_worker(cfg_kwargs: dict):
    return run_trial(TrialConfig(**cfg_kwargs))


def _sweep_configs(args) -> list[TrialConfig]:
    planners = (
        list(PLANNER_STRINGS)
        if args.planners == "all"
        else [p.strip() for p in args.planners.split(",")]
    )
    fleets = _parse_int_list(args.fleets)
    seeds = _parse_int_list(args.seeds)
    return [
        TrialConfig(
            map_source=args.map,
            fleet=fleet,
            planner=planner,
            duration=args.duration,
            seed=seed,
        )
        for planner in planners
        for fleet in fleets
        for seed in seeds
    ]


def run_sweep(configs: list[TrialConfig], jobs: int) -> list:
    """Run trials (optionally in parallel); results come back in the
    stable (planner, fleet, seed) grid order regardless of scheduling."""
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(
                    _run_trial_worker,
                    [
                        {
                            "map_source": c.map_source,
                            "fleet": c.fleet,
                            "planner": c.planner,
                            "duration": c.duration,
                            "seed": c.seed,
                            "fallback_period_s": c.fallback_period_s,
                            "pbs_window_s": c.pbs_window_s,
                            "pbs_max_attempts": c.pbs_max_attempts,
                            "collision_check": c.collision_check,
                            "strict": c.strict,
                        }
                        for c in configs
                    ],
                )
            )
    else:
        maps: dict[str, object] = {}
        results = []
        for c in configs:
            topo = maps.get(c.map_source)
            if topo is None:
                topo = simulator.resolve_map(c.map_source)
                maps[c.map_source] = topo
            results.append(run_trial(c, topo=topo))
    order = {
        (c.planner, c.fleet_size(), c.seed): i for i, c in enumerate(configs)
    }
    results.sort(key=lambda r: order[(r.planner, r.fleet_size, r.seed)])
    return results


def _throughput_cells(results) -> dict[tuple[str, int], float | None]:
    """Mean relative throughput (% of matched naive) per (planner, fleet)."""
    naive = {
        (r.fleet_size, r.seed): r.tasks_completed
        for r in results
        if r.planner == "naive"
    }
    cells: dict[tuple[str, int], list[float]] = {}
    for r in results:
        if r.planner == "naive":
            continue
        base = naive.get((r.fleet_size, r.seed))
        rel = relative_throughput(r.tasks_completed, base) if base else None
        if rel is not None:
            cells.setdefault((r.planner, r.fleet_size), []).append(rel)
    return {
        key: (sum(v) / len(v) if v else None) for key, v in cells.items()
    }


def throughput_table(results) -> str:
    """Relative-throughput table: one row per non-naive planner, one
    column per fleet size."""
    fleets = sorted({r.fleet_size for r in results})
    planners = [p for p in PLANNER_STRINGS if p != "naive"]
    planners = [p for p in planners if any(r.planner == p for r in results)]
    cells = _throughput_cells(results)
    width = max(len(p) for p in planners + ["planner"]) + 2
    head = "planner".ljust(width) + "".join(f"fleet {f}".rjust(10) for f in fleets)
    lines = [head, "-" * len(head)]
    for p in planners:
        row = p.ljust(width)
        for f in fleets:
            val = cells.get((p, f))
            row += ("-" if val is None else f"{val:.1f}%").rjust(10)
        lines.append(row)
    return "\n".join(lines)


def _write_sweep_outputs(outdir: str, results) -> None:
    os.makedirs(outdir, exist_ok=True)
    taskdir = os.path.join(outdir, "tasks")
    os.makedirs(taskdir, exist_ok=True)
    for r in results:
        with open(
            os.path.join(taskdir, f"{r.trial_id}.csv"), "w", encoding="utf-8"
        ) as fh:
            fh.write(TASK_CSV_HEADER + "\n")
            for line in task_csv_lines(r):
                fh.write(line + "\n")
    with open(os.path.join(outdir, "trials.csv"), "w", encoding="utf-8") as fh:
        fh.write(TRIAL_CSV_HEADER + "\n")
        for r in results:
            fh.write(trial_csv_line(r) + "\n")
    # plot-ready CSVs
    cells = _throughput_cells(results)
    agg: dict[tuple[str, int], list] = {}
    for r in results:
        agg.setdefault((r.planner, r.fleet_size), []).append(r)
    with open(
        os.path.join(outdir, "plot_throughput_vs_poe.csv"), "w", encoding="utf-8"
    ) as fh:
        fh.write("planner,fleet,mean_tasks,mean_poe_avg\n")
        for (p, f), rs in sorted(agg.items()):
            tasks = sum(r.tasks_completed for r in rs) / len(rs)
            poes = [poe_avg(r.completed_tasks) for r in rs]
            poes = [x for x in poes if x is not None]
            mp = sum(poes) / len(poes) if poes else None
            fh.write(f"{p},{f},{tasks:.6f},{'' if mp is None else f'{mp:.6f}'}\n")
    with open(
        os.path.join(outdir, "plot_poe_by_planner.csv"), "w", encoding="utf-8"
    ) as fh:
        fh.write("planner,fleet,seed,poe_avg\n")
        for r in results:
            pa = poe_avg(r.completed_tasks)
            fh.write(
                f"{r.planner},{r.fleet_size},{r.seed},"
                f"{'' if pa is None else f'{pa:.6f}'}\n"
            )
    with open(
        os.path.join(outdir, "plot_throughput_by_fleet.csv"), "w", encoding="utf-8"
    ) as fh:
        fh.write("planner,fleet,mean_tasks,rel_throughput_pct\n")
        for (p, f), rs in sorted(agg.items()):
            tasks = sum(r.tasks_completed for r in rs) / len(rs)
            rel = cells.get((p, f))
            fh.write(
                f"{p},{f},{tasks:.6f},{'' if rel is None else f'{rel:.6f}'}\n"
            )


def cmd_sweep(args) -> int:
    configs = _sweep_configs(args)
    results = run_sweep(configs, args.jobs)
    _write_sweep_outputs(args.out, results)
    print(throughput_table(results))
    failed = [r.trial_id for r in results if r.failed]
    print(
        f"sweep complete: {len(results)} trials -> {args.out}"
        + (f" ({len(failed)} FAILED strict collision check)" if failed else "")
    )
    return 2 if failed else 0


# --- report -----------------------------------------------------------------------


def cmd_report(args) -> int:
    trials_path = os.path.join(args.dir, "trials.csv")
    if not os.path.exists(trials_path):
        raise OSError(f"no trials.csv under {args.dir!r}")
    with open(trials_path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != TRIAL_CSV_HEADER:
            raise ValueError(f"unexpected trials.csv header: {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    mismatches = []
    print("trial_id".ljust(34) + "tasks".rjust(7) + "poe_task".rjust(11)
          + "poe_avg".rjust(11) + "recheck".rjust(9))
    for row in rows:
        trial_id, _, _, _, n_str, pt_str, pa_str = row[:7]
        tpath = os.path.join(args.dir, "tasks", f"{trial_id}.csv")
        if not os.path.exists(tpath):
            mismatches.append(f"{trial_id}: missing per-task log")
            continue
        opt = exe = 0.0
        ratios = []
        with open(tpath, encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) != 11:
                    continue
                d_opt, d_exec = float(parts[8]), float(parts[9])
                opt += d_opt
                exe += d_exec
                ratios.append(d_exec / d_opt)
        n = len(ratios)
        pt = sum(ratios) / n if n else None
        pa = exe / opt if n else None

        def _close(stored: str, recomputed) -> bool:
            if stored == "" or recomputed is None:
                return stored == "" and recomputed is None
            # task rows carry 6-decimal distances, so allow rounding slack
            return abs(float(stored) - recomputed) < 1e-4

        ok = n == int(n_str) and _close(pt_str, pt) and _close(pa_str, pa)
        if not ok:
            mismatches.append(
                f"{trial_id}: stored ({n_str}, {pt_str}, {pa_str}) !="
                f" recomputed ({n}, {pt}, {pa})"
            )
        print(
            trial_id.ljust(34)
            + str(n).rjust(7)
            + ("-" if pt is None else f"{pt:.4f}").rjust(11)
            + ("-" if pa is None else f"{pa:.4f}").rjust(11)
            + ("ok" if ok else "MISMATCH").rjust(9)
        )
    for m in mismatches:
        print(f"AUDIT MISMATCH: {m}", file=sys.stderr)
    return 1 if mismatches else 0


# --- entry ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mrpp",
        description="Multi-robot path planning trials on topological maps",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    mg = sub.add_parser("mapgen", help="generate a polytunnel map file")
    mg.add_argument("--preset", choices=["reference"], default=None)
    mg.add_argument("--tunnels", type=int, default=2)
    mg.add_argument("--rows", type=int, default=5)
    mg.add_argument("--nodes-per-row", type=int, default=5)
    mg.add_argument("--row-spacing", type=float, default=5.0)
    mg.add_argument("--node-spacing", type=float, default=3.3)
    mg.add_argument("--header-speed", type=float, default=2.0)
    mg.add_argument("--row-speed", type=float, default=1.0)
    mg.add_argument("--envelope", type=float, default=1.0)
    mg.add_argument("--one-way-rows", action="store_true")
    mg.add_argument("--out", required=True)
    mg.set_defaults(func=cmd_mapgen)

    rn = sub.add_parser("run", help="run a single trial")
    rn.add_argument("--config", help="trial config JSON (flags override)")
    rn.add_argument("--map", default=None, help="map file or preset:reference")
    rn.add_argument("--fleet", type=int, default=None)
    rn.add_argument("--fleet-config", help="fleet config JSON file")
    rn.add_argument("--planner", default=None, choices=PLANNER_STRINGS)
    rn.add_argument("--duration", type=float, default=None)
    rn.add_argument("--seed", type=int, default=None)
    rn.add_argument("--fallback-period", type=float, default=None)
    rn.add_argument("--pbs-window", type=float, default=None)
    rn.add_argument("--pbs-max-attempts", type=int, default=None)
    rn.add_argument(
        "--collision-check",
        type=lambda s: s.lower() in ("1", "true", "yes"),
        default=None,
    )
    rn.add_argument("--no-strict", action="store_true")
    rn.add_argument("--out", default=".")
    rn.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run a planner x fleet x seed grid")
    sw.add_argument("--planners", default="all")
    sw.add_argument("--fleets", default="5-10")
    sw.add_argument("--seeds", default=None)
    sw.add_argument("--duration", type=float, default=3600.0)
    sw.add_argument("--map", default="preset:reference")
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sw.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="recompute summaries from raw task logs")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "run" and args.map is None and not args.config:
        args.map = "preset:reference"
    if args.command == "sweep" and args.seeds is None:
        args.seeds = str(_env_seed())
    try:
        return args.func(args)
    except (MapError, FleetError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
