"""Synchronous randomized (Δ+1) slot assignment over a neighbor graph.

Each round, every unassigned node draws a candidate slot uniformly from its
remaining palette and announces it to its neighbors. A node keeps the slot
only if no received announcement (candidate of an active neighbor, or the
committed slot of a finished neighbor) carries the same value; on a clash the
candidate is struck from the node's palette. Committed nodes announce their
slot once, resending until every neighbor has received it, and a node never
commits while some inbound announcement for the current round was lost. With
no loss the whole run is a pure function of (graph, seed).

A run terminates at quiescence: every node committed and every committed-slot
announcement delivered. The final announcement round therefore counts toward
rounds_to_completion; it is the round in which the last assignments become
visible to the network (and to an observer watching the blinks).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graph import LANE_LOSS, LANE_PICK, Graph, philox_stream


class InsufficientPaletteError(ValueError):
    """Palette override smaller than Δ+1."""


class IncompleteAssignmentError(ValueError):
    """Assignment passed to verify_coloring does not cover every node."""


class InvalidPrecoloringError(ValueError):
    """Pre-colored nodes conflict or use out-of-range slots."""


class NonConvergenceError(RuntimeError):
    """Round cap reached; carries the partial assignment and stats."""

    def __init__(self, message: str, assignment: dict[int, int], stats: "RoundStats"):
        super().__init__(message)
        self.assignment = assignment
        self.stats = stats


@dataclass(frozen=True)
class LossModel:
    """Independent per-link, per-round announcement loss.

    p_fail is the probability that one node's round announcement is not
    received by one given neighbor. p_fail = 0 reproduces the lossless
    trace exactly for the same seed (loss draws live on their own stream).
    """

    p_fail: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError(f"p_fail must be in [0, 1], got {self.p_fail}")


@dataclass
class RoundStats:
    """Per-run counters. rounds_to_completion includes the final round that
    drains the last committed-slot announcements (network quiescence)."""

    rounds_to_completion: int
    colored_per_round: list[int] = field(default_factory=list)
    palette_resets: int = 0


class ColoringState:
    """Mutable protocol state: per-node palette, candidate, committed slot.

    `known_fixed[v]` is node v's local knowledge of committed neighbor slots
    (it only ever contains announcements that actually arrived). `pending
    resend` marks nodes whose last announcement was dropped toward some
    neighbor and will therefore re-announce next round.
    """

    def __init__(
        self,
        g: Graph,
        palette_size: int | None = None,
        precolored: Mapping[int, int] | None = None,
    ):
        delta = g.max_degree()
        if palette_size is None:
            palette_size = delta + 1
        elif palette_size <= delta:
            raise InsufficientPaletteError(
                f"palette_size {palette_size} insufficient: max degree {delta} needs >= {delta + 1}"
            )
        n = g.node_count
        self.palette_size = palette_size
        self.round = 0
        self.num_colored = 0
        self.fixed: list[int | None] = [None] * n
        self.tentative: list[int | None] = [None] * n
        self.palette: list[set[int]] = [set(range(palette_size)) for _ in range(n)]
        self.pending_resend: list[bool] = [False] * n
        self.palette_resets = 0
        self.colored_per_round: list[int] = []
        self.known_fixed: list[dict[int, int]] = [{} for _ in range(n)]
        # committed node -> neighbors that still owe a successful delivery
        self._owed: dict[int, set[int]] = {}

        if precolored:
            for v, slot in precolored.items():
                if not (0 <= v < n):
                    raise InvalidPrecoloringError(f"pre-colored node {v} out of range")
                if not (0 <= slot < palette_size):
                    raise InvalidPrecoloringError(f"slot {slot} outside palette of size {palette_size}")
            for v, slot in precolored.items():
                for w in g.neighbors(v):
                    if precolored.get(w) == slot:
                        raise InvalidPrecoloringError(
                            f"adjacent pre-colored nodes {v} and {w} share slot {slot}"
                        )
            for v, slot in sorted(precolored.items()):
                self.fixed[v] = slot
                self.num_colored += 1
                owed = {w for w in g.neighbors(v) if w not in precolored}
                if owed:
                    self._owed[v] = owed

    @property
    def is_complete(self) -> bool:
        """Every node holds a slot (announcements may still be in flight)."""
        return self.num_colored == len(self.fixed)

    @property
    def is_quiescent(self) -> bool:
        """Complete and no committed-slot announcement left to deliver."""
        return self.is_complete and not self._owed

    def assignment(self) -> dict[int, int]:
        """Committed slots so far (total only once is_complete)."""
        return {v: s for v, s in enumerate(self.fixed) if s is not None}

    def stats(self) -> RoundStats:
        return RoundStats(self.round, list(self.colored_per_round), self.palette_resets)


def step_round(state: ColoringState, g: Graph, seed: int, loss: LossModel = LossModel()) -> None:
    """Advance the protocol one synchronous round (in place).

    Randomness is counter-based: the draw for a node (or a directed link)
    depends only on (seed, round, index), never on iteration order, so a
    lossless and a lossy run with the same seed share their pick sequence.
    """
    if state.is_quiescent:
        raise ValueError("coloring already complete and quiescent")
    n = g.node_count
    r = state.round
    pick_u = philox_stream(seed, LANE_PICK, r).random(n)
    arrived = None
    if loss.p_fail > 0.0:
        draws = philox_stream(seed, LANE_LOSS, r).random(2 * g.edge_count)
        arrived = draws >= loss.p_fail

    def arr(u: int, v: int) -> bool:
        if arrived is None:
            return True
        return bool(arrived[g.directed_edge_index(u, v)])

    uncolored = [v for v in range(n) if state.fixed[v] is None]
    state.pending_resend = [False] * n

    # draw candidates
    for v in uncolored:
        pal = sorted(state.palette[v])
        state.tentative[v] = pal[min(int(pick_u[v] * len(pal)), len(pal) - 1)]

    # deliver owed committed-slot announcements (one per link per round)
    for u in sorted(state._owed):
        targets = state._owed[u]
        delivered = {v for v in targets if arr(u, v)}
        for v in delivered:
            state.known_fixed[v][u] = state.fixed[u]  # type: ignore[assignment]
        targets -= delivered
        state.pending_resend[u] = bool(targets)
    state._owed = {u: t for u, t in state._owed.items() if t}

    # resolve each active node against what actually arrived
    to_fix: list[int] = []
    for v in uncolored:
        tv = state.tentative[v]
        conflict = False
        missing = False
        known = state.known_fixed[v]
        for w in g.neighbors(v):
            if state.fixed[w] is None:
                if arr(w, v):
                    if state.tentative[w] == tv:
                        conflict = True
                else:
                    missing = True
                    state.pending_resend[w] = True
            elif w in known:
                if known[w] == tv:
                    conflict = True
            else:
                # committed neighbor whose announcement has not reached v yet
                missing = True
        if conflict:
            state.palette[v].discard(tv)  # type: ignore[arg-type]
            if not state.palette[v]:
                state.palette[v] = set(range(state.palette_size)) - set(known.values())
                state.palette_resets += 1
        elif not missing:
            to_fix.append(v)

    for v in to_fix:
        state.fixed[v] = state.tentative[v]
        state.num_colored += 1
        # a freshly committed node cannot know which neighbors still need its
        # slot, so it announces to all of them (they cache or ignore)
        owed = set(g.neighbors(v))
        if owed:
            state._owed[v] = owed

    state.round += 1
    state.colored_per_round.append(state.num_colored)


def run_to_completion(
    g: Graph,
    seed: int,
    loss: LossModel = LossModel(),
    max_rounds: int = 1000,
    palette_size: int | None = None,
    precolored: Mapping[int, int] | None = None,
) -> tuple[dict[int, int], RoundStats]:
    """Run rounds until every node holds a slot; the result is a proper coloring.

    Raises NonConvergenceError (carrying the partial assignment and stats)
    if the cap is hit first.
    """
    if max_rounds < 1:
        raise ValueError(f"max_rounds must be >= 1, got {max_rounds}")
    state = ColoringState(g, palette_size=palette_size, precolored=precolored)
    while not state.is_quiescent:
        if state.round >= max_rounds:
            raise NonConvergenceError(
                f"no complete coloring after {max_rounds} rounds "
                f"({state.num_colored}/{g.node_count} nodes colored)",
                state.assignment(),
                state.stats(),
            )
        step_round(state, g, seed, loss)
    return state.assignment(), state.stats()


def verify_coloring(g: Graph, assignment: Mapping[int, int]) -> bool:
    """True iff no edge joins two nodes with the same slot. Assignment must be total."""
    for v in range(g.node_count):
        if v not in assignment:
            raise IncompleteAssignmentError(f"node {v} has no slot")
    return all(assignment[u] != assignment[v] for u, v in g.edges)
