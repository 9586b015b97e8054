"""Kekulization of lowercase input and Hückel aromaticity perception.

Perception runs on the Kekulé form, so ``C1=CC=CC=C1`` and ``c1ccccc1``
end up with identical aromatic flags.  Each ring atom is classified by the
number of pi electrons it can donate (0, 1 or 2, or "not a candidate");
single rings and fused combinations of rings are then tested against the
4n+2 rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Sequence

from polymm.chem.elements import charged_valences, element
from polymm.chem.errors import KekulizationFailure

# beyond this many candidate rings in one fused system only small combinations are tried
_MAX_EXHAUSTIVE_RINGS = 10
_MAX_COMBO_SIZE = 6


class Donor(Enum):
    NONE = None
    VACANT = 0
    ONE = 1
    TWO = 2


@dataclass
class AtomView:
    """Mutable per-atom scratch record used while the graph is being built."""

    number: int
    charge: int
    aromatic_input: bool
    total_h: int
    neighbors: list[int]
    bonds: list[int]


def kekulize(
    atoms: Sequence[AtomView],
    bond_pairs: Sequence[tuple[int, int]],
    aromatic_bonds: set[int],
    fixed_orders: dict[int, int],
) -> dict[int, int]:
    """Assign single/double orders to the aromatic bonds of the input.

    ``fixed_orders`` holds the orders of all non-aromatic bonds.  Returns the
    order chosen for every aromatic bond.

    Raises:
        KekulizationFailure: no alternating assignment exists.
    """
    if not aromatic_bonds:
        return {}
    needs: set[int] = set()
    for i, at in enumerate(atoms):
        if not at.aromatic_input:
            continue
        used = at.total_h
        for b in at.bonds:
            used += 1 if b in aromatic_bonds else fixed_orders[b]
        vals = charged_valences(at.number, at.charge)
        if vals is None:
            continue
        free = vals[0] - used
        if free < 0 and len(vals) > 1:
            free = next((v for v in vals if v >= used), used) - used
        if free >= 1:
            needs.add(i)

    # candidate partners for each atom needing a double bond
    options: dict[int, list[tuple[int, int]]] = {i: [] for i in needs}
    for b in sorted(aromatic_bonds):
        x, y = bond_pairs[b]
        if x in needs and y in needs:
            options[x].append((y, b))
            options[y].append((x, b))

    matched: dict[int, int] = {}
    doubles: set[int] = set()

    def solve() -> bool:
        free_atoms = [i for i in needs if i not in matched]
        if not free_atoms:
            return True
        # most constrained atom first keeps the search shallow
        pick = min(free_atoms, key=lambda i: (sum(1 for j, _ in options[i] if j not in matched), i))
        for j, b in options[pick]:
            if j in matched:
                continue
            matched[pick] = j
            matched[j] = pick
            doubles.add(b)
            if solve():
                return True
            del matched[pick]
            del matched[j]
            doubles.discard(b)
        return False

    if not solve():
        bad = min(i for i in needs if i not in matched) if needs else 0
        raise KekulizationFailure(f"cannot assign alternating bonds around atom {bad}")
    return {b: (2 if b in doubles else 1) for b in aromatic_bonds}


def count_atom_electrons(at: AtomView, orders: Sequence[int]) -> int:
    """Electrons an atom could donate to a pi system, or -1 when it cannot take part."""
    if at.number == 0:
        return -1
    el = element(at.number)
    dv = el.default_valence
    if dv <= 1:
        return -1
    degree = len(at.neighbors) + at.total_h
    if degree > 3:
        return -1
    lone = max(el.outer_electrons - dv - at.charge, 0)
    res = (dv - degree) + lone
    if res > 1:
        unsaturation = sum(orders[b] - 1 for b in at.bonds)
        if unsaturation > 1:
            res = 1
    return res


def donor_type(i: int, atoms: Sequence[AtomView], orders: Sequence[int], ring_bonds: set[int]) -> Donor:
    at = atoms[i]
    nelec = count_atom_electrons(at, orders)
    if nelec < 0:
        return Donor.NONE
    multiple = [b for b in at.bonds if orders[b] >= 2]
    exocyclic = [b for b in multiple if b not in ring_bonds]
    cyclic = [b for b in multiple if b in ring_bonds]
    if nelec == 0:
        if exocyclic:
            return Donor.VACANT
        if cyclic:
            return Donor.ONE
        return Donor.NONE
    if nelec == 1:
        if exocyclic:
            partner = _partner(i, exocyclic[0], atoms)
            if _more_electronegative(atoms[partner].number, at.number):
                return Donor.VACANT
            return Donor.ONE
        if multiple:
            return Donor.ONE
        if at.charge == 1:
            return Donor.VACANT
        return Donor.NONE
    if multiple:
        return Donor.ONE
    return Donor.TWO


def _partner(i: int, bond: int, atoms: Sequence[AtomView]) -> int:
    at = atoms[i]
    return at.neighbors[at.bonds.index(bond)]


def _more_electronegative(a: int, b: int) -> bool:
    ea, eb = element(a).outer_electrons, element(b).outer_electrons
    return ea > eb or (ea == eb and a < b)


def is_candidate(i: int, atoms: Sequence[AtomView], orders: Sequence[int], donor: Donor) -> bool:
    at = atoms[i]
    if donor is Donor.NONE:
        return False
    if at.number > 18 and at.number not in (34, 52):
        return False
    el = element(at.number)
    total_valence = sum(orders[b] for b in at.bonds) + at.total_h
    if el.default_valence > 0 and total_valence > el.outer_electrons - at.charge:
        return False
    n_multiple = sum(1 for b in at.bonds if orders[b] >= 2)
    if n_multiple > 1:
        return False
    return True


def perceive(
    atoms: Sequence[AtomView],
    bond_pairs: Sequence[tuple[int, int]],
    orders: Sequence[int],
    rings: Sequence[tuple[int, ...]],
) -> tuple[set[int], set[int]]:
    """Find aromatic atoms and bonds on a Kekulé structure.

    Returns:
        (aromatic atom indices, aromatic bond indices)
    """
    pair_to_bond = {}
    for b, (x, y) in enumerate(bond_pairs):
        pair_to_bond[(x, y)] = b
        pair_to_bond[(y, x)] = b
    ring_bond_sets = [
        frozenset(pair_to_bond[(r[k], r[(k + 1) % len(r)])] for k in range(len(r))) for r in rings
    ]
    all_ring_bonds = set().union(*ring_bond_sets) if ring_bond_sets else set()

    donors = {i: donor_type(i, atoms, orders, all_ring_bonds) for r in rings for i in r}
    electrons = {}
    for i, d in donors.items():
        if is_candidate(i, atoms, orders, d):
            electrons[i] = d.value

    cand = [k for k, r in enumerate(rings) if all(i in electrons for i in r)]
    aromatic_atoms: set[int] = set()
    aromatic_bonds: set[int] = set()
    for system in _fused_systems(cand, ring_bond_sets):
        done: set[int] = set()
        sizes = range(1, len(system) + 1)
        if len(system) > _MAX_EXHAUSTIVE_RINGS:
            sizes = range(1, _MAX_COMBO_SIZE + 1)
        for size in sizes:
            for combo in combinations(system, size):
                if set(combo) <= done:
                    continue
                if size > 1 and not (_connected(combo, ring_bond_sets) and _simple_perimeter(combo, rings)):
                    continue
                union_atoms = set().union(*(rings[k] for k in combo))
                total = sum(electrons[i] for i in union_atoms)
                if total % 4 == 2:
                    done.update(combo)
                    aromatic_atoms |= union_atoms
                    # bonds fusing two rings of the combination are interior, not perimeter
                    seen_once: dict[int, int] = {}
                    for k in combo:
                        for b in ring_bond_sets[k]:
                            seen_once[b] = seen_once.get(b, 0) + 1
                    aromatic_bonds |= {b for b, c in seen_once.items() if c == 1}
            if len(done) == len(system):
                break
    return aromatic_atoms, aromatic_bonds


def _fused_systems(ring_ids: list[int], ring_bond_sets) -> list[list[int]]:
    systems: list[list[int]] = []
    remaining = list(ring_ids)
    while remaining:
        seed = remaining.pop(0)
        group = [seed]
        changed = True
        while changed:
            changed = False
            for k in list(remaining):
                if any(ring_bond_sets[k] & ring_bond_sets[g] for g in group):
                    group.append(k)
                    remaining.remove(k)
                    changed = True
        systems.append(sorted(group))
    return systems


def _simple_perimeter(combo: Sequence[int], rings) -> bool:
    counts: dict[int, int] = {}
    for k in combo:
        for i in rings[k]:
            counts[i] = counts.get(i, 0) + 1
    return max(counts.values()) <= 2


def _connected(combo: Sequence[int], ring_bond_sets) -> bool:
    seen = {combo[0]}
    stack = [combo[0]]
    while stack:
        k = stack.pop()
        for other in combo:
            if other not in seen and ring_bond_sets[k] & ring_bond_sets[other]:
                seen.add(other)
                stack.append(other)
    return len(seen) == len(combo)
