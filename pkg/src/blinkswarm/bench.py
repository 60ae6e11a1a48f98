"""Benchmark runners behind the CLI: protocol round counts and observer sweeps.

Every run derives its seed from (base seed, grid point, trial) through a seed
sequence, so a manifest fully determines every output file byte for byte.
"""

from __future__ import annotations

import csv
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from .coloring import LossModel, NonConvergenceError, run_to_completion
from .graph import erdos_renyi
from .observer import (
    CameraConfig,
    NonRecognitionError,
    observe,
    rounds_until_recognized,
)
from .scenarios import recognition_scene

COLOR_RUNS_HEADER = ["n", "c", "seed", "p_fail", "rounds", "palette_resets"]
COLOR_SUMMARY_HEADER = ["n", "mean_rounds", "ln_n", "two_ln_n", "three_ln_n"]
ACCURACY_HEADER = ["n_droplets", "distance_m", "angle_deg", "trial", "detected", "total", "accuracy"]
ROUNDS_HEADER = ["n_droplets", "trial", "rounds"]

OBSERVE_SCENARIOS = ("distance-sweep", "count-sweep", "angle-sweep", "rounds-vs-n")


def derive_seed(base: int, *key: int) -> int:
    """Stable 64-bit child seed for one grid point of a sweep."""
    return int(np.random.SeedSequence(entropy=base, spawn_key=tuple(key)).generate_state(1)[0])


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _color_run(args: tuple[int, float, int, float, int]) -> tuple[int, float, int, float, int, int]:
    n, c, seed, p_fail, max_rounds = args
    g = erdos_renyi(n, c, seed=seed)
    try:
        _, stats = run_to_completion(g, seed=seed, loss=LossModel(p_fail), max_rounds=max_rounds)
        return (n, c, seed, p_fail, stats.rounds_to_completion, stats.palette_resets)
    except NonConvergenceError as exc:
        return (n, c, seed, p_fail, -1, exc.stats.palette_resets)


def run_color_bench(
    n_min: int = 100,
    n_max: int = 2000,
    n_step: int = 100,
    c: float = 3.0,
    iterations: int = 5,
    p_fail: float = 0.0,
    base_seed: int = 0,
    max_rounds: int = 1000,
    workers: int = 1,
) -> tuple[list[tuple], list[tuple]]:
    """Generate ER graphs over the n grid, color them, and tabulate rounds.

    Returns (run_rows, summary_rows): one run row per (n, iteration) with -1
    rounds flagging non-convergence, and one summary row per n with the mean
    alongside ln n, 2 ln n, 3 ln n reference columns.
    """
    if n_min < 1 or n_step < 1 or iterations < 1:
        raise ValueError("n_min, n_step, and iterations must be >= 1")
    grid = [
        (n, c, derive_seed(base_seed, n, it), p_fail, max_rounds)
        for n in range(n_min, n_max + 1, n_step)
        for it in range(iterations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_color_run, grid, chunksize=8))
    else:
        results = [_color_run(args) for args in grid]
    results.sort(key=lambda r: (r[0], r[2]))

    summary = []
    for n in range(n_min, n_max + 1, n_step):
        rounds = [r[4] for r in results if r[0] == n and r[4] >= 0]
        mean = statistics.fmean(rounds) if rounds else float("nan")
        summary.append((n, mean, math.log(n), 2 * math.log(n), 3 * math.log(n)))
    return results, summary


def color_rows_for_csv(results: list[tuple]) -> list[list[str]]:
    return [[str(n), f"{c:g}", str(seed), f"{p:g}", str(rounds), str(resets)]
            for n, c, seed, p, rounds, resets in results]


def summary_rows_for_csv(summary: list[tuple]) -> list[list[str]]:
    return [[str(n), _fmt(mean), _fmt(ln), _fmt(ln2), _fmt(ln3)]
            for n, mean, ln, ln2, ln3 in summary]


def _accuracy_trial(arena, cfg: CameraConfig, seed: int) -> tuple[int, int]:
    """One observation frame; counts detections that also carry the true label."""
    snap = arena.snapshot()
    truth = {d["id"]: d["symbol"] for d in snap["droplets"]}
    rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 9]))
    frame = observe(snap, cfg, rng)
    correct = sum(1 for det in frame.detections if det.symbol == truth[det.droplet_id])
    return correct, len(truth)


def run_observe_bench(
    scenario: str,
    trials: int = 3,
    base_seed: int = 0,
    n_droplets: int = 8,
    max_periods: int = 60,
) -> tuple[list[str], list[list[str]]]:
    """Reproduce one of the observer experiment grids; returns (header, rows)."""
    rows: list[list[str]] = []
    if scenario == "distance-sweep":
        distances = [round(0.1 * i, 1) for i in range(1, 11)]
        for trial in range(trials):
            arena = recognition_scene(n_droplets, seed=derive_seed(base_seed, 1, trial))
            for di, d in enumerate(distances):
                cfg = CameraConfig(distance_m=d, angle_deg=0.0)
                correct, total = _accuracy_trial(arena, cfg, derive_seed(base_seed, 2, di, trial))
                rows.append([str(n_droplets), f"{d:g}", "0", str(trial),
                             str(correct), str(total), _fmt(correct / total)])
        return ACCURACY_HEADER, rows
    if scenario == "count-sweep":
        for n in range(1, 22):
            for trial in range(trials):
                arena = recognition_scene(n, seed=derive_seed(base_seed, 3, n, trial))
                cfg = CameraConfig(distance_m=0.3, angle_deg=0.0)
                correct, total = _accuracy_trial(arena, cfg, derive_seed(base_seed, 4, n, trial))
                rows.append([str(n), "0.3", "0", str(trial),
                             str(correct), str(total), _fmt(correct / total)])
        return ACCURACY_HEADER, rows
    if scenario == "angle-sweep":
        angles = [15.0 * i for i in range(7)]
        for ai, angle in enumerate(angles):
            for n in (5, 8, 11):
                for trial in range(trials):
                    arena = recognition_scene(n, seed=derive_seed(base_seed, 5, n, trial))
                    cfg = CameraConfig(distance_m=0.3, angle_deg=angle)
                    correct, total = _accuracy_trial(
                        arena, cfg, derive_seed(base_seed, 6, ai, n, trial)
                    )
                    rows.append([str(n), "0.3", f"{angle:g}", str(trial),
                                 str(correct), str(total), _fmt(correct / total)])
        return ACCURACY_HEADER, rows
    if scenario == "rounds-vs-n":
        cfg = CameraConfig()
        for n in range(2, 21):
            for trial in range(trials):
                arena = recognition_scene(n, seed=derive_seed(base_seed, 7, n, trial))
                try:
                    r = rounds_until_recognized(
                        arena, cfg, seed=derive_seed(base_seed, 8, n, trial), max_periods=max_periods
                    )
                except NonRecognitionError:
                    r = -1
                rows.append([str(n), str(trial), str(r)])
        return ROUNDS_HEADER, rows
    raise ValueError(f"unknown scenario {scenario!r}; expected one of {OBSERVE_SCENARIOS}")
