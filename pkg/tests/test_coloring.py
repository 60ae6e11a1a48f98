import math
import random

import pytest

from blinkswarm.coloring import (
    ColoringState,
    IncompleteAssignmentError,
    InsufficientPaletteError,
    InvalidPrecoloringError,
    LossModel,
    NonConvergenceError,
    run_to_completion,
    step_round,
    verify_coloring,
)
from blinkswarm.graph import Graph, erdos_renyi

TRIANGLE = Graph(3, [(0, 1), (1, 2), (0, 2)])
PATH3 = Graph(3, [(0, 1), (1, 2)])
K2 = Graph(2, [(0, 1)])


def paper_algorithm_rounds(g: Graph, rng: random.Random, max_rounds: int = 200) -> int:
    """Independent oracle: direct transcription of the pseudocode round loop.

    Every unfixed vertex picks a random color from its palette and compares
    it against the last pick of every neighbor (a finished neighbor's last
    pick is its final color). Unique -> keep; clash -> strike from palette.
    Kept separate from the library implementation on purpose.
    """
    n = g.node_count
    delta = g.max_degree()
    palettes = [set(range(delta + 1)) for _ in range(n)]
    rand_color = [None] * n
    colored = [False] * n
    rounds = 0
    while not all(colored) and rounds < max_rounds:
        picks = {v: rng.choice(sorted(palettes[v])) for v in range(n) if not colored[v]}
        for v, c in picks.items():
            rand_color[v] = c
        for v, c in picks.items():
            if all(rand_color[w] != c for w in g.neighbors(v)):
                colored[v] = True
            else:
                palettes[v].discard(c)
                if not palettes[v]:
                    palettes[v] = set(range(delta + 1)) - {
                        rand_color[w] for w in g.neighbors(v) if colored[w]
                    }
        rounds += 1
    return rounds


def test_init_palettes_triangle():
    state = ColoringState(TRIANGLE)
    assert state.palette_size == 3
    assert all(p == {0, 1, 2} for p in state.palette)


def test_init_single_node():
    state = ColoringState(Graph(1))
    assert state.palette == [{0}]


def test_init_insufficient_palette():
    star = Graph(6, [(0, i) for i in range(1, 6)])
    with pytest.raises(InsufficientPaletteError):
        ColoringState(star, palette_size=4)  # needs >= 6


def test_single_node_fixes_in_one_round():
    state = ColoringState(Graph(1))
    step_round(state, Graph(1), seed=3)
    assert state.fixed == [0]
    assert state.round == 1


def _k2_first_round(seed: int) -> ColoringState:
    state = ColoringState(K2)
    step_round(state, K2, seed=seed)
    return state


def test_two_nodes_distinct_picks_both_fix():
    for seed in range(200):
        state = ColoringState(K2)
        pre = ColoringState(K2)
        step_round(pre, K2, seed=seed)
        if pre.tentative[0] != pre.tentative[1]:
            step_round(state, K2, seed=seed)
            assert state.num_colored == 2
            assert state.fixed[0] != state.fixed[1]
            return
    pytest.fail("no seed produced distinct first-round picks")


def test_two_nodes_same_pick_neither_fixes_and_palette_shrinks():
    for seed in range(200):
        state = _k2_first_round(seed)
        if state.num_colored == 0:
            t = state.tentative[0]
            assert state.tentative[1] == t
            assert t not in state.palette[0]
            assert t not in state.palette[1]
            return
    pytest.fail("no seed produced a first-round collision")


def test_palette_reset_recovers_from_lockstep_exhaustion():
    # A first-round collision on K2 drains both palettes to one shared color,
    # so the second round collides again and empties them; the reset rule must
    # refill and the run must still complete.
    for seed in range(400):
        state = _k2_first_round(seed)
        if state.num_colored == 0:
            assignment, stats = run_to_completion(K2, seed=seed)
            assert verify_coloring(K2, assignment)
            assert stats.palette_resets >= 2
            return
    pytest.fail("no collision seed found")


def test_path3_round_count_against_paper_oracle():
    # Oracle run establishes that 10 rounds suffice with probability >= 0.999.
    rng = random.Random(12345)
    trials = 30_000
    over = sum(1 for _ in range(trials) if paper_algorithm_rounds(PATH3, rng) > 10)
    assert over / trials <= 0.001
    # The library implementation matches that behavior over a seed sweep.
    over_impl = 0
    for seed in range(3000):
        _, stats = run_to_completion(PATH3, seed=seed)
        if stats.rounds_to_completion > 10:
            over_impl += 1
    assert over_impl / 3000 <= 0.001


def test_er1000_mean_rounds_within_log_envelope():
    rounds = []
    for seed in range(5):
        g = erdos_renyi(1000, 3, seed=seed)
        _, stats = run_to_completion(g, seed=seed)
        rounds.append(stats.rounds_to_completion)
    mean = sum(rounds) / len(rounds)
    assert math.log(1000) <= mean <= 3 * math.log(1000)


def test_max_rounds_zero_rejected():
    with pytest.raises(ValueError):
        run_to_completion(TRIANGLE, seed=1, max_rounds=0)


def test_max_rounds_one_on_triangle_fails():
    # even a lucky all-distinct first draw still needs the announcement round
    for seed in range(40):
        with pytest.raises(NonConvergenceError) as excinfo:
            run_to_completion(TRIANGLE, seed=seed, max_rounds=1)
        assert excinfo.value.stats.rounds_to_completion == 1
        assert len(excinfo.value.assignment) <= 3


def test_verify_coloring_examples():
    assert verify_coloring(TRIANGLE, {0: 0, 1: 1, 2: 2})
    assert not verify_coloring(K2, {0: 1, 1: 1})
    with pytest.raises(IncompleteAssignmentError):
        verify_coloring(K2, {0: 1})


def test_completed_runs_are_proper_and_in_slot_range():
    rng = random.Random(7)
    for trial in range(300):
        n = rng.randint(1, 120)
        c = rng.uniform(0, min(6, n - 1)) if n > 1 else 0
        g = erdos_renyi(n, c, seed=trial)
        assignment, stats = run_to_completion(g, seed=trial * 31 + 1)
        assert verify_coloring(g, assignment)
        assert all(0 <= s < g.max_degree() + 1 for s in assignment.values())
        assert stats.colored_per_round == sorted(stats.colored_per_round)


def test_lossless_trace_deterministic():
    g = erdos_renyi(200, 3, seed=11)
    a1, s1 = run_to_completion(g, seed=42)
    a2, s2 = run_to_completion(g, seed=42)
    assert a1 == a2
    assert s1.colored_per_round == s2.colored_per_round
    a3, _ = run_to_completion(g, seed=43)
    assert a3 != a1


def test_negligible_loss_reproduces_lossless_trace():
    # Loss draws live on their own stream, so a loss probability too small to
    # ever fire leaves the pick sequence and the whole trace untouched.
    g = erdos_renyi(80, 3, seed=5)
    a0, s0 = run_to_completion(g, seed=9, loss=LossModel(0.0))
    a1, s1 = run_to_completion(g, seed=9, loss=LossModel(1e-12))
    assert a0 == a1
    assert s0.colored_per_round == s1.colored_per_round


def test_total_loss_never_converges_with_neighbors():
    with pytest.raises(NonConvergenceError):
        run_to_completion(K2, seed=1, loss=LossModel(1.0), max_rounds=50)
    # a neighborless node still fixes: there is nothing to receive
    assignment, _ = run_to_completion(Graph(1), seed=1, loss=LossModel(1.0))
    assert assignment == {0: 0}


def test_lossy_runs_still_produce_proper_colorings():
    for seed in range(60):
        g = erdos_renyi(60, 3, seed=seed)
        assignment, _ = run_to_completion(g, seed=seed, loss=LossModel(0.1), max_rounds=500)
        assert verify_coloring(g, assignment)


def test_loss_model_validation():
    with pytest.raises(ValueError):
        LossModel(-0.1)
    with pytest.raises(ValueError):
        LossModel(1.5)


def test_precolored_nodes_keep_slots():
    g = PATH3
    assignment, _ = run_to_completion(g, seed=2, palette_size=4, precolored={0: 3})
    assert assignment[0] == 3
    assert verify_coloring(g, assignment)


def test_precolored_conflict_rejected():
    with pytest.raises(InvalidPrecoloringError):
        ColoringState(K2, palette_size=2, precolored={0: 1, 1: 1})
    with pytest.raises(InvalidPrecoloringError):
        ColoringState(K2, palette_size=2, precolored={0: 5})


def test_step_on_complete_state_rejected():
    state = ColoringState(Graph(1))
    step_round(state, Graph(1), seed=0)
    with pytest.raises(ValueError):
        step_round(state, Graph(1), seed=0)
