"""Element data, Bohr-style bonding arithmetic, and the molecule lookup table.

Atoms expose a single integer bond capacity ("free slots"); bonding is gated
on remaining capacity only. Electronegativity is carried for central-atom
determination and for display, not as a bonding threshold: the source model
never defines one, so we deliberately do not invent it.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

CompositionKey = tuple[tuple[str, int], ...]

_FORMULA_TOKEN = re.compile(r"([A-Z][a-z]?)(\d*)")


class TableFormatError(ValueError):
    """Element/molecule data file is malformed."""


class BondRefusedError(ValueError):
    """Requested bond violates remaining capacity."""


class NotAMoleculeError(ValueError):
    """Member set is empty or not bond-connected."""


@dataclass(frozen=True)
class Element:
    symbol: str
    atomic_number: int
    atomic_mass: float
    electronegativity: float
    free_slots: int
    display_color: str


@dataclass(frozen=True)
class MoleculeRecord:
    """One lookup-table entry, keyed by composition (isomers are not split)."""

    composition: CompositionKey
    formula: str
    geometry: str
    gibbs_free_energy: float
    bond_list: tuple[tuple[str, str, int], ...] = ()


@dataclass
class AtomInstance:
    """A single atom held by one droplet; bonds map partner atom id -> order."""

    id: int
    element: Element
    bonds: dict[int, int] = field(default_factory=dict)

    @property
    def used_slots(self) -> int:
        return sum(self.bonds.values())

    @property
    def remaining_slots(self) -> int:
        return self.element.free_slots - self.used_slots

    def bond_list(self) -> list[tuple[int, int]]:
        """Sorted (partner id, order) pairs."""
        return sorted(self.bonds.items())


def composition_key(composition: Mapping[str, int] | Iterable[str]) -> CompositionKey:
    if not isinstance(composition, Mapping):
        composition = Counter(composition)
    return tuple(sorted((sym, int(n)) for sym, n in composition.items() if n))


def parse_formula(formula: str) -> Counter[str]:
    counts: Counter[str] = Counter()
    pos = 0
    for match in _FORMULA_TOKEN.finditer(formula):
        if match.start() != pos:
            raise TableFormatError(f"cannot parse formula {formula!r}")
        counts[match.group(1)] += int(match.group(2) or 1)
        pos = match.end()
    if pos != len(formula) or not counts:
        raise TableFormatError(f"cannot parse formula {formula!r}")
    return counts


def hill_formula(composition: Mapping[str, int]) -> str:
    """Conventional formula string: C first, then H, then alphabetical."""
    symbols = sorted(composition, key=lambda s: (s != "C", s != "H", s))
    return "".join(f"{s}{composition[s]}" if composition[s] > 1 else s for s in symbols)


class ElementTable:
    """Immutable element set plus the composition-keyed molecule table."""

    def __init__(self, elements: Iterable[Element], molecules: Iterable[MoleculeRecord]):
        self.elements: dict[str, Element] = {}
        for el in elements:
            if el.symbol in self.elements:
                raise TableFormatError(f"duplicate element symbol {el.symbol!r}")
            if el.electronegativity <= 0:
                raise TableFormatError(f"{el.symbol}: electronegativity must be > 0")
            if el.free_slots < 1:
                raise TableFormatError(f"{el.symbol}: free_slots must be >= 1")
            self.elements[el.symbol] = el
        colors = [el.display_color for el in self.elements.values()]
        if len(set(colors)) != len(colors):
            raise TableFormatError("display colors must be pairwise distinct")
        self.molecules: dict[CompositionKey, MoleculeRecord] = {}
        for rec in molecules:
            if rec.composition in self.molecules:
                raise TableFormatError(f"duplicate molecule entry {rec.formula!r}")
            self.molecules[rec.composition] = rec

    def element(self, symbol: str) -> Element:
        try:
            return self.elements[symbol]
        except KeyError:
            raise KeyError(f"unknown element symbol {symbol!r}") from None

    def lookup(self, composition: Mapping[str, int] | Iterable[str]) -> MoleculeRecord | None:
        """Table entry for the exact composition, or None when not tabulated."""
        return self.molecules.get(composition_key(composition))

    def new_atom(self, atom_id: int, symbol: str) -> AtomInstance:
        return AtomInstance(id=atom_id, element=self.element(symbol))


def _canonical_bonds(composition: Counter[str], elements: Mapping[str, Element]) -> tuple[tuple[str, str, int], ...]:
    """Reference bond pattern for display: peripheral atoms single-bonded to the
    highest-electronegativity center, except same-element pairs which take the
    highest order both can carry."""
    syms = sorted(composition.elements())
    if len(syms) < 2:
        return ()
    if len(syms) == 2 and syms[0] == syms[1]:
        el = elements.get(syms[0])
        if el is None:
            return ()
        return ((syms[0], syms[1], el.free_slots),)
    known = [s for s in set(syms) if s in elements]
    if len(known) != len(set(syms)):
        return ()
    center = max(known, key=lambda s: elements[s].electronegativity)
    rest = list(syms)
    rest.remove(center)
    return tuple((center, s, 1) for s in rest)


def load_element_table(path: str | None = None) -> ElementTable:
    """Parse the line-oriented data file; defaults to the packaged table.

    Grammar: '#' comments and blank lines ignored;
    'E symbol Z mass electronegativity free_slots color' element records;
    'M formula geometry gibbs_kJ_per_mol' molecule records.
    """
    if path is None:
        text = resources.files("blinkswarm").joinpath("data/elements.dat").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()

    elements: list[Element] = []
    raw_molecules: list[tuple[str, str, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "E":
                if len(fields) != 7:
                    raise ValueError("expected 6 fields after E")
                _, sym, z, mass, en, slots, color = fields
                elements.append(
                    Element(sym, int(z), float(mass), float(en), int(slots), color)
                )
            elif kind == "M":
                if len(fields) != 4:
                    raise ValueError("expected 3 fields after M")
                raw_molecules.append((fields[1], fields[2], float(fields[3])))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: {exc}") from None

    by_symbol = {el.symbol: el for el in elements}
    molecules = []
    for formula, geometry, gibbs in raw_molecules:
        comp = parse_formula(formula)
        molecules.append(
            MoleculeRecord(
                composition=composition_key(comp),
                formula=formula,
                geometry=geometry,
                gibbs_free_energy=gibbs,
                bond_list=_canonical_bonds(comp, by_symbol),
            )
        )
    return ElementTable(elements, molecules)


def can_bond(a: AtomInstance, b: AtomInstance) -> bool:
    """True iff both atoms still have capacity for at least one more bond order."""
    if a.id == b.id:
        raise ValueError("an atom cannot bond with itself")
    return a.remaining_slots >= 1 and b.remaining_slots >= 1


def form_bond(a: AtomInstance, b: AtomInstance, order: int = 1) -> None:
    """Record a symmetric bond of the given order; merges with an existing bond."""
    if order < 1:
        raise BondRefusedError(f"bond order must be >= 1, got {order}")
    if a.id == b.id:
        raise ValueError("an atom cannot bond with itself")
    if order > a.remaining_slots or order > b.remaining_slots:
        raise BondRefusedError(
            f"order-{order} bond refused: remaining slots "
            f"{a.element.symbol}#{a.id}={a.remaining_slots}, {b.element.symbol}#{b.id}={b.remaining_slots}"
        )
    a.bonds[b.id] = a.bonds.get(b.id, 0) + order
    b.bonds[a.id] = b.bonds.get(a.id, 0) + order


def break_all_bonds(atoms: Iterable[AtomInstance]) -> None:
    """Clear every bond among the given atoms (used by molecule break-up)."""
    group = {a.id: a for a in atoms}
    for a in group.values():
        for partner in list(a.bonds):
            if partner in group:
                del a.bonds[partner]


def central_atoms(members: list[AtomInstance]) -> tuple[set[int], bool]:
    """Center atom ids plus the diatomic flag.

    Exactly two members with equal electronegativity are a diatomic: both are
    centers and the flag is set. Otherwise the members with the highest
    electronegativity are the centers. Members must be bond-connected.
    """
    if not members:
        raise NotAMoleculeError("empty member set")
    by_id = {a.id: a for a in members}
    seen = {members[0].id}
    stack = [members[0].id]
    while stack:
        cur = by_id[stack.pop()]
        for partner in cur.bonds:
            if partner in by_id and partner not in seen:
                seen.add(partner)
                stack.append(partner)
    if len(seen) != len(by_id):
        raise NotAMoleculeError("member set is not bond-connected")

    if len(members) == 2:
        a, b = members
        if a.element.electronegativity == b.element.electronegativity:
            return {a.id, b.id}, True
    top = max(a.element.electronegativity for a in members)
    return {a.id for a in members if a.element.electronegativity == top}, False
