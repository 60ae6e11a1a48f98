"""Deterministic scene builders for tests, demos, and benchmark sweeps.

Seeds jitter placements without ever changing the qualitative outcome: the
molecule scenarios always assemble their target molecule, and the recognition
scenes always produce the same group structure for a given droplet count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sim import Arena, ArenaConfig

LANE_SCENARIO = 6


def _scenario_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), LANE_SCENARIO]))


@dataclass
class MoleculeRun:
    """Result of a seeded molecule scenario."""

    arena: Arena
    group_id: int
    composition_trace: list[tuple[int, str]]  # (tick, formula) at each change


def _single_group(arena: Arena):
    assert len(arena.groups) == 1, f"expected one group, found {len(arena.groups)}"
    return next(iter(arena.groups.values()))


def h2_scene(seed: int) -> MoleculeRun:
    """Two hydrogens seeded adjacent; they bond on the first tick."""
    rng = _scenario_rng(seed)
    arena = Arena(ArenaConfig(seed=seed, random_walk=False))
    cx, cy = 0.4 + 0.7 * rng.random(), 0.3 + 0.4 * rng.random()
    gap = 0.025 + 0.015 * rng.random()
    theta = 2 * math.pi * rng.random()
    arena.add_droplet("H", cx, cy)
    arena.add_droplet("H", cx + gap * math.cos(theta), cy + gap * math.sin(theta))
    arena.seal()
    arena.tick()
    group = _single_group(arena)
    return MoleculeRun(arena, group.id, [(arena.tick_count, group.formula)])


def o2_scene(seed: int) -> MoleculeRun:
    rng = _scenario_rng(seed)
    arena = Arena(ArenaConfig(seed=seed, random_walk=False))
    cx, cy = 0.4 + 0.7 * rng.random(), 0.3 + 0.4 * rng.random()
    gap = 0.025 + 0.015 * rng.random()
    theta = 2 * math.pi * rng.random()
    arena.add_droplet("O", cx, cy)
    arena.add_droplet("O", cx + gap * math.cos(theta), cy + gap * math.sin(theta))
    arena.seal()
    arena.tick()
    group = _single_group(arena)
    return MoleculeRun(arena, group.id, [(arena.tick_count, group.formula)])


def h2o_scene(seed: int) -> MoleculeRun:
    """Oxygen with two hydrogens on roughly opposite sides (never H-H range)."""
    rng = _scenario_rng(seed)
    arena = Arena(ArenaConfig(seed=seed, random_walk=False))
    cx, cy = 0.4 + 0.7 * rng.random(), 0.3 + 0.4 * rng.random()
    theta = 2 * math.pi * rng.random()
    opposite = theta + math.pi + math.radians(-10 + 20 * rng.random())
    arena.add_droplet("O", cx, cy)
    for angle in (theta, opposite):
        r = 0.035 + 0.008 * rng.random()
        arena.add_droplet("H", cx + r * math.cos(angle), cy + r * math.sin(angle))
    arena.seal()
    arena.tick()
    group = _single_group(arena)
    return MoleculeRun(arena, group.id, [(arena.tick_count, group.formula)])


def ch4_staged_scene(seed: int, max_stage_ticks: int = 60) -> MoleculeRun:
    """Carbon plus four hydrogens steered in one at a time (staged assembly).

    Each hydrogen starts well outside sensing range and is steered toward the
    carbon only after the previous one has bonded, so the group composition
    walks through CH, CH2, CH3, CH4.
    """
    rng = _scenario_rng(seed)
    arena = Arena(ArenaConfig(seed=seed, random_walk=False))
    cx, cy = 0.55 + 0.4 * rng.random(), 0.35 + 0.3 * rng.random()
    c_id = arena.add_droplet("C", cx, cy)
    base = 2 * math.pi * rng.random()
    h_ids = []
    for i in range(4):
        angle = base + i * math.pi / 2 + math.radians(-8 + 16 * rng.random())
        r = 0.12 + 0.05 * i
        h_ids.append(arena.add_droplet("H", cx + r * math.cos(angle), cy + r * math.sin(angle)))
    arena.seal()

    trace: list[tuple[int, str]] = []
    group_id = None
    for stage, h_id in enumerate(h_ids, start=1):
        carbon = arena.droplets[c_id]
        arena.apply_command({"op": "steer", "id": h_id, "x": carbon.x, "y": carbon.y})
        for _ in range(max_stage_ticks):
            arena.tick()
            if arena.droplets[c_id].atom.used_slots >= stage:
                break
        else:
            raise RuntimeError(f"stage {stage} did not bond within {max_stage_ticks} ticks")
        group = _single_group(arena)
        group_id = group.id
        trace.append((arena.tick_count, group.formula))
    return MoleculeRun(arena, group_id, trace)


MOLECULE_SCENES = {"H2": h2_scene, "O2": o2_scene, "H2O": h2o_scene, "CH4": ch4_staged_scene}


def recognition_scene(n_droplets: int, seed: int) -> Arena:
    """Static scene for observer benchmarks: carbon-backbone molecules grown by
    attaching hydrogens one at a time, round-robin across groups.

    Groups sit far apart (never adjacent), so the blink-slot protocol may
    legitimately reuse slots between them. Hydrogens sit tight enough that
    neighbors stay within sensing range of each other: the structures are
    robust to detection dropouts, and recognition difficulty in crowded
    scenes comes from the observer's blink-timing drift instead.
    """
    if not 1 <= n_droplets <= 24:
        raise ValueError("n_droplets must be within [1, 24]")
    rng = _scenario_rng(seed)
    arena = Arena(ArenaConfig(seed=seed, random_walk=False))
    n_carbons = max(1, math.ceil(n_droplets / 5))
    anchors = [(0.25 + 0.32 * (i % 4), 0.22 + 0.33 * (i // 4)) for i in range(n_carbons)]
    carbon_ids = []
    for i in range(n_carbons):
        ax = anchors[i][0] + float(rng.uniform(-0.01, 0.01))
        ay = anchors[i][1] + float(rng.uniform(-0.01, 0.01))
        carbon_ids.append(arena.add_droplet("C", ax, ay))
    n_h = n_droplets - n_carbons
    for h in range(n_h):
        c_ix = h % n_carbons
        rank = h // n_carbons
        carbon = arena.droplets[carbon_ids[c_ix]]
        radius = 0.032
        angle = rank * math.pi / 2 + float(rng.uniform(-0.08, 0.08))
        h_id = arena.add_droplet(
            "H", carbon.x + radius * math.cos(angle), carbon.y + radius * math.sin(angle)
        )
        arena.bond_droplets(carbon_ids[c_ix], h_id)
    arena.seal()
    return arena


def random_scene(seed: int, n_droplets: int, ticks: int = 60) -> Arena:
    """Random mixed-element scene left to bond freely, then frozen."""
    rng = _scenario_rng(seed)
    arena = Arena(ArenaConfig(seed=seed, width=0.8, height=0.6))
    symbols = ["H", "H", "H", "O", "O", "C"]
    for _ in range(n_droplets):
        arena.add_droplet(
            symbols[int(rng.random() * len(symbols))],
            float(0.1 + rng.random() * 0.6),
            float(0.1 + rng.random() * 0.4),
        )
    arena.seal()
    for _ in range(ticks):
        arena.tick()
    arena.config.random_walk = False
    return arena


def crowded_scene(seed: int, n_droplets: int = 16, ticks: int = 80) -> Arena:
    """Dense scene that tends to produce adjacent molecules (for blink tests)."""
    rng = _scenario_rng(seed)
    arena = Arena(ArenaConfig(seed=seed, width=0.4, height=0.3, step_length=0.008))
    symbols = ["H", "H", "H", "H", "O", "O", "C"]
    for _ in range(n_droplets):
        arena.add_droplet(
            symbols[int(rng.random() * len(symbols))],
            float(0.05 + rng.random() * 0.3),
            float(0.05 + rng.random() * 0.2),
        )
    arena.seal()
    for _ in range(ticks):
        arena.tick()
    return arena
