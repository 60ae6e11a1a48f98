"""Arena life cycle: wandering droplets bond into molecules, the molecule
adjacency graph gets colored, and each molecule blinks red in its own slot.

Prints an ASCII blink timeline where each column is a tick and each row a
molecule: '#' marks the ticks in which that molecule's members flash red.
Adjacent molecules never share a column.
"""

from blinkswarm.scenarios import crowded_scene

arena = crowded_scene(seed=5)
print(f"after {arena.tick_count} ticks: {len(arena.droplets)} droplets, "
      f"{len(arena.groups)} molecules")
for gid in sorted(arena.groups):
    g = arena.groups[gid]
    geometry = g.record.geometry if g.record else "untabulated"
    print(f"  molecule {gid}: {g.formula:<6} members={list(g.member_ids)} "
          f"slot={g.blink_slot} geometry={geometry}")

graph, gids = arena.molecule_adjacency()
print(f"\nmolecule adjacency: {graph.edge_count} edge(s) among {graph.node_count} molecule(s)")
for u, v in sorted(graph.edges):
    print(f"  {gids[u]} <-> {gids[v]} (slots {arena.groups[gids[u]].blink_slot} "
          f"vs {arena.groups[gids[v]].blink_slot})")

period = arena.config.blink_period
print(f"\nblink timeline over one period ({arena.config.slot_count} slots x "
      f"{arena.config.ticks_per_slot} ticks):")
header = "".join(str((t // arena.config.ticks_per_slot) % 10) for t in range(period))
print(f"  slot       {header}")
for gid in sorted(arena.groups):
    members = set(arena.groups[gid].member_ids)
    row = "".join("#" if members & arena.blinking_now(t) else "." for t in range(period))
    print(f"  molecule {gid} {row}")

print("\nbreaking the largest molecule...")
largest = max(arena.groups.values(), key=lambda g: len(g.member_ids))
arena.apply_command({"op": "break_molecule", "group_id": largest.id})
print(f"  now {len(arena.groups)} molecules; freed droplets wander again")
for _ in range(40):
    arena.tick()
print(f"  after 40 more ticks: {len(arena.groups)} molecules "
      f"({[g.formula for g in arena.groups.values()]})")
