"""Command-line entry point: blinkswarm color-bench | sim | observe-bench | serve.

Exit codes: 0 success, 2 config/usage error, 3 non-convergence-only failures
(benchmark rows flagged -1 but everything else fine). Every subcommand writes
a manifest.json beside its outputs; rerunning an identical manifest rewrites
byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Any

from .bench import (
    ACCURACY_HEADER,
    COLOR_RUNS_HEADER,
    COLOR_SUMMARY_HEADER,
    OBSERVE_SCENARIOS,
    color_rows_for_csv,
    run_color_bench,
    run_observe_bench,
    summary_rows_for_csv,
    write_csv,
)
from .config import ConfigError, build_arena, parse_script
from .sim import FLOW_OPS

DROPLET_CSV_HEADER = ["tick", "id", "symbol", "x", "y", "molecule_id", "blinking"]
GROUP_CSV_HEADER = ["tick", "group_id", "slot", "formula", "geometry", "gibbs",
                    "members", "centers", "diatomic"]


def _run_id(params: dict[str, Any]) -> str:
    blob = json.dumps(params, sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def _write_manifest(out_dir: str, subcommand: str, params: dict[str, Any]) -> str:
    os.makedirs(out_dir, exist_ok=True)
    run_id = _run_id({"subcommand": subcommand, **params})
    manifest = {"subcommand": subcommand, "run_id": run_id, "params": params}
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="ascii") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return run_id


def cmd_color_bench(args: argparse.Namespace) -> int:
    n_max = 10_000 if args.full_scale else args.n_max
    params = dict(
        n_min=args.n_min, n_max=n_max, n_step=args.n_step, c=args.c,
        iterations=args.iterations, p_fail=args.p_fail, seed=args.seed,
        max_rounds=args.max_rounds,
    )
    run_id = _write_manifest(args.out, "color-bench", params)
    results, summary = run_color_bench(
        n_min=args.n_min, n_max=n_max, n_step=args.n_step, c=args.c,
        iterations=args.iterations, p_fail=args.p_fail, base_seed=args.seed,
        max_rounds=args.max_rounds, workers=args.workers,
    )
    write_csv(os.path.join(args.out, "color_runs.csv"), COLOR_RUNS_HEADER,
              color_rows_for_csv(results))
    write_csv(os.path.join(args.out, "color_summary.csv"), COLOR_SUMMARY_HEADER,
              summary_rows_for_csv(summary))
    failed = sum(1 for r in results if r[4] < 0)
    print(f"color-bench {run_id}: {len(results)} runs, {failed} non-converged")
    for n, mean, ln, _, ln3 in summary:
        print(f"  n={n:5d}  mean_rounds={mean:7.3f}  [ln n={ln:5.2f}, 3 ln n={ln3:5.2f}]")
    return 3 if failed else 0


def cmd_sim(args: argparse.Namespace) -> int:
    arena = build_arena(args.config)
    script = parse_script(args.script) if args.script else []
    by_tick: dict[int, list[dict[str, Any]]] = {}
    for sc in script:
        by_tick.setdefault(sc.tick, []).append(sc.command)
    params = dict(config=os.path.basename(args.config), ticks=args.ticks,
                  script=os.path.basename(args.script) if args.script else None,
                  seed=arena.config.seed)
    run_id = _write_manifest(args.out, "sim", params)

    droplet_rows: list[list[str]] = []
    group_rows: list[list[str]] = []
    jsonl_path = os.path.join(args.out, "snapshots.jsonl")

    def log_snapshot(fh) -> None:
        snap = arena.snapshot()
        fh.write(json.dumps(snap, sort_keys=True) + "\n")
        for d in snap["droplets"]:
            droplet_rows.append([str(snap["tick"]), str(d["id"]), d["symbol"],
                                 f"{d['x']:.6f}", f"{d['y']:.6f}",
                                 "" if d["molecule_id"] is None else str(d["molecule_id"]),
                                 "1" if d["blinking"] else "0"])
        for g in snap["groups"]:
            group_rows.append([str(snap["tick"]), str(g["id"]),
                               "" if g["slot"] is None else str(g["slot"]),
                               g["formula"], g["geometry"] or "",
                               "" if g["gibbs"] is None else f"{g['gibbs']:g}",
                               ";".join(map(str, g["members"])),
                               ";".join(map(str, g["centers"])),
                               "1" if g["diatomic"] else "0"])

    paused = False
    with open(jsonl_path, "w", encoding="ascii") as fh:
        log_snapshot(fh)
        for wall_tick in range(args.ticks):
            for command in by_tick.get(wall_tick, ()):
                op = command["op"]
                if op in FLOW_OPS:
                    if op == "pause":
                        paused = True
                    elif op == "resume":
                        paused = False
                    else:  # step k
                        for _ in range(command["k"]):
                            arena.tick()
                            log_snapshot(fh)
                else:
                    arena.queue_command(command)
            if not paused:
                arena.tick()
                log_snapshot(fh)

    write_csv(os.path.join(args.out, "droplets.csv"), DROPLET_CSV_HEADER, droplet_rows)
    write_csv(os.path.join(args.out, "groups.csv"), GROUP_CSV_HEADER, group_rows)
    print(f"sim {run_id}: {arena.tick_count} ticks, {len(arena.droplets)} droplets, "
          f"{len(arena.groups)} molecules")
    return 0


def cmd_observe_bench(args: argparse.Namespace) -> int:
    params = dict(scenario=args.scenario, trials=args.trials, seed=args.seed,
                  n_droplets=args.n_droplets)
    run_id = _write_manifest(args.out, "observe-bench", params)
    header, rows = run_observe_bench(
        args.scenario, trials=args.trials, base_seed=args.seed, n_droplets=args.n_droplets
    )
    name = args.scenario.replace("-", "_") + ".csv"
    write_csv(os.path.join(args.out, name), header, rows)
    failed = sum(1 for r in rows if header is not ACCURACY_HEADER and r[-1] == "-1")
    print(f"observe-bench {run_id}: {len(rows)} rows -> {name}")
    return 3 if failed else 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    arena = build_arena(args.config)
    params = dict(config=os.path.basename(args.config), seed=arena.config.seed,
                  tick_ms=args.tick_ms)
    run_id = _run_id({"subcommand": "serve", **params})
    app = create_app(arena, run_id=run_id, tick_interval=args.tick_ms / 1000.0,
                     static_dir=args.static)
    print(f"serve {run_id}: ws://{args.host}:{args.port}/ws")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blinkswarm",
        description="Swarm chemistry simulator with distributed blink-slot coloring.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("color-bench", help="protocol round-count benchmark over ER graphs")
    p.add_argument("--n-min", type=int, default=100)
    p.add_argument("--n-max", type=int, default=2000)
    p.add_argument("--n-step", type=int, default=100)
    p.add_argument("-c", type=float, default=3.0, help="target average vertex degree")
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--p-fail", type=float, default=0.0)
    p.add_argument("--max-rounds", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full-scale", action="store_true", help="extend the grid to n=10000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="bench_out")
    p.set_defaults(func=cmd_color_bench)

    p = sub.add_parser("sim", help="run the arena and log snapshots")
    p.add_argument("--config", required=True)
    p.add_argument("--ticks", type=int, default=200)
    p.add_argument("--script", help="command script applied at scheduled ticks")
    p.add_argument("--out", default="sim_out")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("observe-bench", help="observer accuracy / recognition sweeps")
    p.add_argument("--scenario", required=True, choices=OBSERVE_SCENARIOS)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--n-droplets", type=int, default=8,
                   help="scene size for the distance sweep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="observe_out")
    p.set_defaults(func=cmd_observe_bench)

    p = sub.add_parser("serve", help="run the simulation behind a WebSocket state stream")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--tick-ms", type=float, default=100.0)
    p.add_argument("--static", help="directory of UI files to serve at /", default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
