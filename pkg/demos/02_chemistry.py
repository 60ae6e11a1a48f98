"""Bohr-style bonding rules and the molecule lookup table.

Builds water and methane atom by atom, shows slot bookkeeping, central-atom
selection by electronegativity, and the staged CH4 assembly in the arena.
"""

from blinkswarm.chem import can_bond, central_atoms, form_bond, load_element_table, parse_formula
from blinkswarm.scenarios import ch4_staged_scene

table = load_element_table()

print("=== Shipped element table ===")
for el in table.elements.values():
    print(f"  {el.symbol}: Z={el.atomic_number}  mass={el.atomic_mass}  "
          f"electronegativity={el.electronegativity}  bond slots={el.free_slots}  color={el.display_color}")

print("\n=== Water, one bond at a time ===")
o = table.new_atom(0, "O")
h1, h2 = table.new_atom(1, "H"), table.new_atom(2, "H")
for h in (h1, h2):
    print(f"  can O bond H#{h.id}? {can_bond(o, h)}  (O has {o.remaining_slots} free slots)")
    form_bond(o, h)
print(f"  O now holds bonds {o.bond_list()}, {o.remaining_slots} slots left")
centers, diatomic = central_atoms([o, h1, h2])
print(f"  central atom ids: {sorted(centers)} (diatomic={diatomic}) — oxygen wins on electronegativity")
rec = table.lookup({"H": 2, "O": 1})
print(f"  lookup H2O: geometry={rec.geometry}, Gibbs={rec.gibbs_free_energy} kJ/mol")

print("\n=== A double bond: O2 ===")
a, b = table.new_atom(10, "O"), table.new_atom(11, "O")
form_bond(a, b, order=2)
centers, diatomic = central_atoms([a, b])
print(f"  bond order {a.bonds[11]}, both centers={sorted(centers)}, diatomic flag={diatomic}")

print("\n=== Staged methane assembly in the arena ===")
run = ch4_staged_scene(seed=1)
for tick, formula in run.composition_trace:
    rec = table.lookup(parse_formula(formula))
    print(f"  tick {tick:>3}: composition {formula:<4} geometry={rec.geometry:<15} "
          f"Gibbs={rec.gibbs_free_energy:>7.1f} kJ/mol")
group = run.arena.groups[run.group_id]
print(f"  final molecule: {group.formula}, center droplet(s) {group.center_ids} (the carbon)")
