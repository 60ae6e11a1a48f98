"""Tick-based 2D arena: droplets random-walk, bond into molecules, and acquire
conflict-free blink slots by running the coloring protocol over the molecule
adjacency graph.

The arena has a single logical owner (the tick loop). Commands are queued and
drained at the start of each tick; external readers consume snapshot dicts.
Every random draw comes from one sequential counter-based stream walked in
canonical (sorted-id) order, so an identical (config, command stream) pair
replays an identical state trace.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from . import chem
from .chem import AtomInstance, ElementTable, MoleculeRecord, hill_formula, load_element_table
from .coloring import LossModel, NonConvergenceError, run_to_completion
from .graph import LANE_ARENA, Graph, philox_stream

# ops the arena executes directly; pause/resume/step belong to the tick loop
ARENA_OPS = ("add_atom", "remove_droplet", "break_molecule", "steer")
FLOW_OPS = ("pause", "resume", "step")


class SlotCapacityError(RuntimeError):
    """Molecule adjacency degree reached the slot count; surfaced as an event."""


@dataclass
class ArenaConfig:
    width: float = 1.5
    height: float = 1.0
    sensing_radius: float = 0.05
    step_length: float = 0.01
    slot_count: int = 6
    ticks_per_slot: int = 5
    seed: int = 0
    heading_jitter: float = 0.5
    random_walk: bool = True
    auto_assign_slots: bool = True
    p_fail: float = 0.0
    max_protocol_rounds: int = 1000
    diatomic_max_order: bool = True

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("arena dimensions must be positive")
        if self.sensing_radius <= 0:
            raise ValueError("sensing_radius must be > 0")
        if self.slot_count < 2:
            raise ValueError("slot_count must be >= 2")
        if self.ticks_per_slot < 1:
            raise ValueError("ticks_per_slot must be >= 1")
        if self.step_length < 0:
            raise ValueError("step_length must be >= 0")

    @property
    def blink_period(self) -> int:
        return self.slot_count * self.ticks_per_slot


@dataclass
class Droplet:
    id: int
    atom: AtomInstance
    x: float
    y: float
    heading: float
    molecule_id: int | None = None
    steer_target: tuple[float, float] | None = None

    @property
    def symbol(self) -> str:
        return self.atom.element.symbol


@dataclass
class MoleculeGroup:
    id: int
    member_ids: tuple[int, ...]
    center_ids: tuple[int, ...]
    diatomic: bool
    composition: Counter
    formula: str
    record: MoleculeRecord | None
    heading: float
    blink_slot: int | None = None


@dataclass(frozen=True)
class SimEvent:
    tick: int
    kind: str
    detail: str


class Arena:
    def __init__(self, config: ArenaConfig, table: ElementTable | None = None):
        self.config = config
        self.table = table if table is not None else load_element_table()
        self.tick_count = 0
        self.droplets: dict[int, Droplet] = {}
        self.groups: dict[int, MoleculeGroup] = {}
        self.events: deque[SimEvent] = deque(maxlen=2000)
        self._rng = philox_stream(config.seed, LANE_ARENA)
        self._next_droplet_id = 0
        self._next_group_id = 0
        self._queue: deque[dict[str, Any]] = deque()
        self._in_range_prev: set[tuple[int, int]] = set()
        self._adj_fingerprint: tuple = ((), ())
        self._epoch = 0
        self._warned_unassigned: set[int] = set()

    # ---------------------------------------------------------------- setup

    def add_droplet(self, symbol: str, x: float | None = None, y: float | None = None,
                    heading: float | None = None) -> int:
        """Place one free droplet; random in-bounds position/heading when omitted."""
        if x is None:
            x = float(self._rng.random() * self.config.width)
        if y is None:
            y = float(self._rng.random() * self.config.height)
        if heading is None:
            heading = float(self._rng.random() * 2 * math.pi)
        if not self._in_bounds(x, y):
            raise ValueError(f"position ({x}, {y}) outside arena")
        did = self._next_droplet_id
        self._next_droplet_id += 1
        self.droplets[did] = Droplet(did, self.table.new_atom(did, symbol), x, y, heading)
        return did

    def bond_droplets(self, id_a: int, id_b: int, order: int = 1) -> None:
        """Directly bond two droplets (scenario construction; skips range checks)."""
        chem.form_bond(self.droplets[id_a].atom, self.droplets[id_b].atom, order)
        self._recompute_groups()
        self._refresh_adjacency()

    def seal(self) -> None:
        """Finish seeding: compute groups, adjacency, and the initial range set."""
        self._recompute_groups()
        self._refresh_adjacency()
        self._in_range_prev = self._pairs_in_range()

    def _in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.config.width and 0.0 <= y <= self.config.height

    # ---------------------------------------------------------------- events

    def _event(self, kind: str, detail: str) -> None:
        self.events.append(SimEvent(self.tick_count, kind, detail))

    def events_at(self, tick: int) -> list[SimEvent]:
        return [e for e in self.events if e.tick == tick]

    # ---------------------------------------------------------------- commands

    def queue_command(self, cmd: dict[str, Any]) -> None:
        self._queue.append(dict(cmd))

    def apply_command(self, cmd: dict[str, Any]) -> bool:
        """Execute one state command; rejections leave state untouched and
        emit a command_rejected event. Flow ops (pause/resume/step) belong to
        the tick-loop runner, not the arena."""
        op = cmd.get("op")
        try:
            if op == "add_atom":
                symbol = cmd["symbol"]
                x, y = float(cmd["x"]), float(cmd["y"])
                if symbol not in self.table.elements:
                    raise KeyError(f"unknown element {symbol!r}")
                if not self._in_bounds(x, y):
                    raise ValueError(f"position ({x}, {y}) outside arena")
                self.add_droplet(symbol, x, y)
            elif op == "remove_droplet":
                did = int(cmd["id"])
                droplet = self.droplets[did]
                for partner in list(droplet.atom.bonds):
                    del self.droplets[partner].atom.bonds[did]
                del self.droplets[did]
                self._forget_proximity({did})
            elif op == "break_molecule":
                gid = int(cmd["group_id"])
                group = self.groups[gid]
                chem.break_all_bonds([self.droplets[d].atom for d in group.member_ids])
                # freshly separated atoms need a new full tick of contact to re-bond
                self._forget_proximity(set(group.member_ids))
            elif op == "steer":
                did = int(cmd["id"])
                x, y = float(cmd["x"]), float(cmd["y"])
                if not self._in_bounds(x, y):
                    raise ValueError(f"steer target ({x}, {y}) outside arena")
                self.droplets[did].steer_target = (x, y)
            else:
                raise ValueError(f"unknown op {op!r}")
        except (KeyError, ValueError, chem.BondRefusedError) as exc:
            self._event("command_rejected", f"{op}: {exc}")
            return False
        if op in ("remove_droplet", "break_molecule", "add_atom"):
            self._recompute_groups()
            self._refresh_adjacency()
        self._event("command_applied", str(op))
        return True

    # ---------------------------------------------------------------- tick

    def tick(self) -> None:
        self.tick_count += 1
        while self._queue:
            self.apply_command(self._queue.popleft())
        self._move()
        pairs_now = self._pairs_in_range()
        self._bond_candidates(pairs_now & self._in_range_prev)
        self._in_range_prev = pairs_now
        self._recompute_groups()
        self._refresh_adjacency()

    def _move(self) -> None:
        cfg = self.config
        step = cfg.step_length
        free = [d for d in sorted(self.droplets) if self.droplets[d].molecule_id is None]
        for did in free:
            droplet = self.droplets[did]
            if droplet.steer_target is not None:
                tx, ty = droplet.steer_target
                dist = math.hypot(tx - droplet.x, ty - droplet.y)
                if dist <= step:
                    droplet.x, droplet.y = tx, ty
                    droplet.steer_target = None
                    continue
                droplet.heading = math.atan2(ty - droplet.y, tx - droplet.x)
                droplet.x += step * math.cos(droplet.heading)
                droplet.y += step * math.sin(droplet.heading)
            elif cfg.random_walk and step > 0:
                droplet.heading += float(self._rng.uniform(-cfg.heading_jitter, cfg.heading_jitter))
                dx, dy = step * math.cos(droplet.heading), step * math.sin(droplet.heading)
                nx, ny, flip_x, flip_y = self._reflect(droplet.x + dx, droplet.y + dy)
                if flip_x:
                    droplet.heading = math.pi - droplet.heading
                if flip_y:
                    droplet.heading = -droplet.heading
                droplet.x, droplet.y = nx, ny

        for gid in sorted(self.groups):
            group = self.groups[gid]
            members = [self.droplets[d] for d in group.member_ids]
            steered = next((m for m in members if m.steer_target is not None), None)
            if steered is not None:
                tx, ty = steered.steer_target
                dist = math.hypot(tx - steered.x, ty - steered.y)
                if dist <= step:
                    dx, dy = tx - steered.x, ty - steered.y
                    steered.steer_target = None
                else:
                    group.heading = math.atan2(ty - steered.y, tx - steered.x)
                    dx, dy = step * math.cos(group.heading), step * math.sin(group.heading)
            elif cfg.random_walk and step > 0:
                group.heading += float(self._rng.uniform(-cfg.heading_jitter, cfg.heading_jitter))
                dx, dy = step * math.cos(group.heading), step * math.sin(group.heading)
            else:
                continue
            # reflect the whole rigid body off the walls
            min_x = min(m.x for m in members) + dx
            max_x = max(m.x for m in members) + dx
            min_y = min(m.y for m in members) + dy
            max_y = max(m.y for m in members) + dy
            if min_x < 0 or max_x > cfg.width:
                dx = -dx
                group.heading = math.pi - group.heading
            if min_y < 0 or max_y > cfg.height:
                dy = -dy
                group.heading = -group.heading
            for m in members:
                m.x = min(max(m.x + dx, 0.0), cfg.width)
                m.y = min(max(m.y + dy, 0.0), cfg.height)

    def _forget_proximity(self, ids: set[int]) -> None:
        self._in_range_prev = {p for p in self._in_range_prev if not (p[0] in ids or p[1] in ids)}

    def _reflect(self, x: float, y: float) -> tuple[float, float, bool, bool]:
        cfg = self.config
        flip_x = flip_y = False
        if x < 0:
            x, flip_x = -x, True
        elif x > cfg.width:
            x, flip_x = 2 * cfg.width - x, True
        if y < 0:
            y, flip_y = -y, True
        elif y > cfg.height:
            y, flip_y = 2 * cfg.height - y, True
        return min(max(x, 0.0), cfg.width), min(max(y, 0.0), cfg.height), flip_x, flip_y

    def _pairs_in_range(self) -> set[tuple[int, int]]:
        ids = sorted(self.droplets)
        radius = self.config.sensing_radius
        pairs = set()
        for i, a in enumerate(ids):
            da = self.droplets[a]
            for b in ids[i + 1:]:
                db = self.droplets[b]
                if math.hypot(da.x - db.x, da.y - db.y) <= radius:
                    pairs.add((a, b))
        return pairs

    def _bond_candidates(self, candidates: Iterable[tuple[int, int]]) -> None:
        for a, b in sorted(candidates):
            if a not in self.droplets or b not in self.droplets:
                continue
            atom_a, atom_b = self.droplets[a].atom, self.droplets[b].atom
            if atom_b.id in atom_a.bonds:
                continue  # existing bonds are not escalated by proximity
            if not chem.can_bond(atom_a, atom_b):
                continue
            if (
                self.config.diatomic_max_order
                and not atom_a.bonds
                and not atom_b.bonds
                and atom_a.element.symbol == atom_b.element.symbol
            ):
                order = min(atom_a.remaining_slots, atom_b.remaining_slots)
            else:
                order = 1
            chem.form_bond(atom_a, atom_b, order)
            self._event("bond_formed", f"{a}-{b} order {order}")

    # ---------------------------------------------------------------- groups

    def _recompute_groups(self) -> None:
        """Groups are exactly the connected components of the bond relation.

        Identity retention: a component inherits the id (and heading) of the
        largest previous group fully contained in it, and inherits a blink
        slot only when exactly one slotted previous group is contained — a
        grown molecule keeps its slot, merged slotted molecules re-enter the
        protocol uncolored.
        """
        old_groups = self.groups
        bonded = [d for d in sorted(self.droplets) if self.droplets[d].atom.bonds]
        seen: set[int] = set()
        components: list[tuple[int, ...]] = []
        for start in bonded:
            if start in seen:
                continue
            comp = []
            stack = [start]
            seen.add(start)
            while stack:
                cur = stack.pop()
                comp.append(cur)
                for partner in self.droplets[cur].atom.bonds:
                    if partner not in seen:
                        seen.add(partner)
                        stack.append(partner)
            components.append(tuple(sorted(comp)))

        new_groups: dict[int, MoleculeGroup] = {}
        for members in sorted(components):
            member_set = set(members)
            contained = [g for g in old_groups.values() if set(g.member_ids) <= member_set]
            slotted = [g for g in contained if g.blink_slot is not None]
            if contained:
                donor = max(contained, key=lambda g: (len(g.member_ids), -g.id))
                gid = donor.id
                heading = donor.heading
            else:
                gid = self._next_group_id
                self._next_group_id += 1
                heading = self._mean_heading(members)
            slot = slotted[0].blink_slot if len(slotted) == 1 else None
            atoms = [self.droplets[d].atom for d in members]
            centers, diatomic = chem.central_atoms(atoms)
            composition = Counter(a.element.symbol for a in atoms)
            record = self.table.lookup(composition)
            formula = record.formula if record else hill_formula(composition)
            new_groups[gid] = MoleculeGroup(
                id=gid,
                member_ids=members,
                center_ids=tuple(sorted(centers)),
                diatomic=diatomic,
                composition=composition,
                formula=formula,
                record=record,
                heading=heading,
                blink_slot=slot,
            )
            if gid >= self._next_group_id:
                self._next_group_id = gid + 1

        self.groups = new_groups
        grouped: dict[int, int] = {}
        for gid, group in new_groups.items():
            for d in group.member_ids:
                grouped[d] = gid
        for did, droplet in self.droplets.items():
            droplet.molecule_id = grouped.get(did)
        self._warned_unassigned &= set(new_groups)

    def _mean_heading(self, member_ids: tuple[int, ...]) -> float:
        xs = sum(math.cos(self.droplets[d].heading) for d in member_ids)
        ys = sum(math.sin(self.droplets[d].heading) for d in member_ids)
        return math.atan2(ys, xs) if (xs or ys) else 0.0

    # ---------------------------------------------------------------- slots

    def molecule_adjacency(self) -> tuple[Graph, list[int]]:
        """One node per molecule group (sorted group-id order); an edge joins
        two groups when any member pair is within sensing range."""
        gids = sorted(self.groups)
        index = {gid: i for i, gid in enumerate(gids)}
        radius = self.config.sensing_radius
        edges = []
        for i, ga in enumerate(gids):
            members_a = [self.droplets[d] for d in self.groups[ga].member_ids]
            for gb in gids[i + 1:]:
                members_b = [self.droplets[d] for d in self.groups[gb].member_ids]
                if any(
                    math.hypot(a.x - b.x, a.y - b.y) <= radius
                    for a in members_a
                    for b in members_b
                ):
                    edges.append((index[ga], index[gb]))
        return Graph(len(gids), edges), gids

    def _refresh_adjacency(self) -> None:
        graph, gids = self.molecule_adjacency()
        fingerprint = (tuple(gids), tuple(sorted(graph.edges)))
        if fingerprint == self._adj_fingerprint:
            return
        self._adj_fingerprint = fingerprint
        self._epoch += 1
        self._event("epoch", f"molecule adjacency changed (epoch {self._epoch})")
        if self.config.auto_assign_slots and gids:
            self.assign_blink_slots(graph, gids)

    def assign_blink_slots(self, graph: Graph | None = None, gids: list[int] | None = None) -> None:
        """Run the coloring protocol over the molecule adjacency graph with
        palette size = slot_count. Groups with still-valid slots enter
        pre-colored; a max degree at or above the slot count is surfaced as a
        slot_capacity event and previous slots are kept."""
        if graph is None or gids is None:
            graph, gids = self.molecule_adjacency()
        if not gids:
            return
        cfg = self.config
        delta = graph.max_degree()
        if delta >= cfg.slot_count:
            self._event(
                "slot_capacity",
                f"max molecule degree {delta} needs more than {cfg.slot_count} slots",
            )
            return
        # drop retained slots that now conflict across an edge (both sides)
        slots = {i: self.groups[gid].blink_slot for i, gid in enumerate(gids)}
        conflicted: set[int] = set()
        for u, v in graph.edges:
            if slots[u] is not None and slots[u] == slots[v]:
                conflicted.update((u, v))
        for i in conflicted:
            self.groups[gids[i]].blink_slot = None
        precolored = {
            i: s for i, s in slots.items() if s is not None and i not in conflicted
        }
        seed = int(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, self._epoch)).generate_state(1)[0]
        )
        try:
            assignment, stats = run_to_completion(
                graph,
                seed,
                loss=LossModel(cfg.p_fail),
                max_rounds=cfg.max_protocol_rounds,
                palette_size=cfg.slot_count,
                precolored=precolored,
            )
        except NonConvergenceError as exc:
            self._event("slot_protocol_failed", str(exc))
            return
        for i, gid in enumerate(gids):
            group = self.groups[gid]
            if group.blink_slot != assignment[i]:
                group.blink_slot = assignment[i]
            self._warned_unassigned.discard(gid)
        self._event(
            "slots_assigned",
            f"epoch {self._epoch}: {len(gids)} groups in {stats.rounds_to_completion} rounds",
        )

    def blinking_now(self, tick: int | None = None) -> set[int]:
        """Droplet ids of every group whose slot owns the current interval."""
        if tick is None:
            tick = self.tick_count
        cfg = self.config
        active_slot = (tick % cfg.blink_period) // cfg.ticks_per_slot
        out: set[int] = set()
        for gid in sorted(self.groups):
            group = self.groups[gid]
            if group.blink_slot is None:
                if gid not in self._warned_unassigned:
                    self._warned_unassigned.add(gid)
                    self._event("unassigned_group", f"group {gid} has no blink slot")
                continue
            if group.blink_slot == active_slot:
                out.update(group.member_ids)
        return out

    # ---------------------------------------------------------------- export

    def snapshot(self, tick: int | None = None) -> dict[str, Any]:
        """JSON-ready view of the arena. `tick` overrides the blink phase only
        (used to evaluate the periodic pattern of a frozen scene)."""
        at_tick = self.tick_count if tick is None else tick
        blinking = self.blinking_now(at_tick)
        droplets = [
            {
                "id": d.id,
                "symbol": d.symbol,
                "x": round(d.x, 9),
                "y": round(d.y, 9),
                "molecule_id": d.molecule_id,
                "blinking": d.id in blinking,
            }
            for d in (self.droplets[i] for i in sorted(self.droplets))
        ]
        groups = []
        for gid in sorted(self.groups):
            g = self.groups[gid]
            bonds = sorted(
                (min(a, b), max(a, b), order)
                for a in g.member_ids
                for b, order in self.droplets[a].atom.bonds.items()
                if a < b
            )
            groups.append(
                {
                    "id": g.id,
                    "members": list(g.member_ids),
                    "centers": list(g.center_ids),
                    "diatomic": g.diatomic,
                    "slot": g.blink_slot,
                    "formula": g.formula,
                    "geometry": g.record.geometry if g.record else None,
                    "gibbs": g.record.gibbs_free_energy if g.record else None,
                    "bonds": bonds,
                }
            )
        return {
            "tick": at_tick,
            "arena": {"width": self.config.width, "height": self.config.height},
            "blink": {
                "slot_count": self.config.slot_count,
                "ticks_per_slot": self.config.ticks_per_slot,
                "period": self.config.blink_period,
            },
            "droplets": droplets,
            "groups": groups,
            "events": [
                {"tick": e.tick, "kind": e.kind, "detail": e.detail}
                for e in self.events_at(self.tick_count)
            ],
        }
