"""Distributed blink-slot coloring on random graphs.

Walks through one protocol round by hand on a tiny graph, then sweeps graph
sizes to show the logarithmic growth of rounds-to-completion, including what
happens when announcements get lost.
"""

import math

from blinkswarm.coloring import ColoringState, LossModel, run_to_completion, step_round, verify_coloring
from blinkswarm.graph import erdos_renyi

print("=== One round at a time on a 5-node graph ===")
g = erdos_renyi(5, 2, seed=3)
print(f"graph: {g.node_count} nodes, edges {sorted(g.edges)}")
state = ColoringState(g)
print(f"palette size Δ+1 = {state.palette_size}")
while not state.is_quiescent:
    step_round(state, g, seed=17)
    fixed = {v: s for v, s in enumerate(state.fixed) if s is not None}
    print(f"  round {state.round}: picks={state.tentative}  committed={fixed}")
assignment = state.assignment()
print(f"proper coloring: {verify_coloring(g, assignment)}\n")

print("=== Rounds until completion vs graph size (c = 3, 5 seeds each) ===")
print(f"{'n':>6} {'mean rounds':>12} {'ln n':>7} {'3 ln n':>7}")
for n in (100, 300, 1000, 3000):
    rounds = []
    for seed in range(5):
        graph = erdos_renyi(n, 3, seed=seed)
        _, stats = run_to_completion(graph, seed=seed)
        rounds.append(stats.rounds_to_completion)
    mean = sum(rounds) / len(rounds)
    print(f"{n:>6} {mean:>12.1f} {math.log(n):>7.2f} {3 * math.log(n):>7.2f}")

print("\n=== Message loss adds a flat overhead ===")
print(f"{'n':>6} {'lossless':>9} {'p_fail=0.1':>11} {'overhead':>9}")
for n in (200, 800, 2000):
    base, lossy = [], []
    for seed in range(5):
        graph = erdos_renyi(n, 3, seed=seed)
        _, s0 = run_to_completion(graph, seed=seed)
        _, s1 = run_to_completion(graph, seed=seed, loss=LossModel(0.1))
        base.append(s0.rounds_to_completion)
        lossy.append(s1.rounds_to_completion)
    b, l = sum(base) / 5, sum(lossy) / 5
    print(f"{n:>6} {b:>9.1f} {l:>11.1f} {l - b:>9.1f}")
