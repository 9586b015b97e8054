"""Integer structural counts and the fraction of sp3 carbons."""

from __future__ import annotations

from dataclasses import dataclass

from polymm.chem import BondOrder, MolecularGraph


@dataclass(frozen=True)
class StructuralCounts:
    HeavyAtomCount: int
    NHOHCount: int
    NOCount: int
    FractionCSP3: float
    NumAliphaticRings: int
    NumAromaticRings: int
    NumSaturatedRings: int
    NumAmideBonds: int
    NumRotatableBonds: int


def _aliphatic(graph: MolecularGraph, i: int, number: int) -> bool:
    a = graph.atoms[i]
    return a.number == number and not a.is_aromatic


def _single_chain(graph: MolecularGraph, i: int):
    """Neighbours of ``i`` reached through acyclic single bonds."""
    for b in graph.incident(i):
        if b.order == BondOrder.SINGLE and not b.in_ring:
            yield b.other(i)


def _double_partners(graph: MolecularGraph, i: int):
    for b in graph.incident(i):
        if b.order == BondOrder.DOUBLE:
            yield b.other(i)


def _hetero_donor(graph: MolecularGraph, i: int) -> bool:
    # any N, aliphatic O, or aliphatic S that is not terminal
    return (
        graph.atoms[i].number == 7
        or _aliphatic(graph, i, 8)
        or (_aliphatic(graph, i, 16) and graph.degree(i) != 1)
    )


def _nos(graph: MolecularGraph, i: int) -> bool:
    return any(_aliphatic(graph, i, z) for z in (7, 8, 16))


def _acyl_carbon(graph: MolecularGraph, i: int, exclude: int = -1) -> bool:
    return (
        _aliphatic(graph, i, 6)
        and graph.degree(i) == 3
        and any(j != exclude and _nos(graph, j) for j in _double_partners(graph, i))
    )


def _amidinium_carbon(graph: MolecularGraph, i: int, exclude: int = -1) -> bool:
    return (
        _aliphatic(graph, i, 6)
        and graph.degree(i) == 3
        and any(j != exclude and _aliphatic(graph, j, 7) and graph.atoms[j].charge == 1 for j in _double_partners(graph, i))
    )


def _in_amide_like_bond(graph: MolecularGraph, i: int) -> bool:
    """Atom sits on either end of an acyclic amide, ester, thioester or amidinium C-X bond."""
    if _acyl_carbon(graph, i) and any(_hetero_donor(graph, j) for j in _single_chain(graph, i)):
        return True
    if _hetero_donor(graph, i) and any(_acyl_carbon(graph, j, exclude=i) for j in _single_chain(graph, i)):
        return True
    if _amidinium_carbon(graph, i) and any(
        graph.atoms[j].number == 7 and graph.degree(j) != 1 for j in _single_chain(graph, i)
    ):
        return True
    if graph.atoms[i].number == 7 and graph.degree(i) != 1:
        if any(_amidinium_carbon(graph, j, exclude=i) for j in _single_chain(graph, i)):
            return True
    return False


def _rotor_end(graph: MolecularGraph, i: int) -> bool:
    if graph.degree(i) == 1:
        return False
    if any(b.order == BondOrder.TRIPLE for b in graph.incident(i)):
        return False
    if _aliphatic(graph, i, 6):
        nbrs = graph.neighbors(i)
        for z in (9, 17, 35):
            if sum(1 for j in nbrs if _aliphatic(graph, j, z)) >= 3:
                return False
        if sum(1 for j in nbrs if _aliphatic(graph, j, 6) and graph.atoms[j].total_h == 3) >= 3:
            return False
    return True


def num_rotatable_bonds(graph: MolecularGraph) -> int:
    """Acyclic single bonds between two non-terminal atoms.

    Excluded: bonds at atoms carrying a triple bond, at CF3/CCl3/CBr3 and
    tert-butyl centres, and acyclic amide, ester, thioester and amidinium C-X
    bonds.  The amide-type exclusion is applied to one end at a time, so a
    bond counts when either orientation passes.
    """
    ends = [_rotor_end(graph, i) for i in range(len(graph.atoms))]
    amide_like = [_in_amide_like_bond(graph, i) for i in range(len(graph.atoms))]
    count = 0
    for b in graph.bonds:
        if b.order != BondOrder.SINGLE or b.in_ring:
            continue
        x, y = b.begin, b.end
        if not (ends[x] and ends[y]):
            continue
        if not amide_like[x] or not amide_like[y]:
            count += 1
    return count


def num_amide_bonds(graph: MolecularGraph) -> int:
    """C(=O)-N instances with an acyclic carbonyl oxygen and aliphatic C and N."""
    ring_atoms = graph.ring_atoms
    count = 0
    for c in range(len(graph.atoms)):
        if not _aliphatic(graph, c, 6):
            continue
        oxygens = [j for j in _double_partners(graph, c) if _aliphatic(graph, j, 8) and j not in ring_atoms]
        if not oxygens:
            continue
        nitrogens = [
            b.other(c)
            for b in graph.incident(c)
            if b.order in (BondOrder.SINGLE, BondOrder.AROMATIC) and _aliphatic(graph, b.other(c), 7)
        ]
        count += len(oxygens) * len(nitrogens)
    return count


def fraction_csp3(graph: MolecularGraph) -> float:
    """Share of carbons with no double, triple or aromatic bond; 0 without carbon."""
    n_c = n_sp3 = 0
    for i, a in enumerate(graph.atoms):
        if a.number != 6:
            continue
        n_c += 1
        if all(b.order == BondOrder.SINGLE for b in graph.incident(i)):
            n_sp3 += 1
    return n_sp3 / n_c if n_c else 0.0


def structural_counts(graph: MolecularGraph) -> StructuralCounts:
    n_arom = n_aliph = n_sat = 0
    for ring in graph.rings:
        orders = [b.order for b in graph.ring_bonds(ring)]
        if all(o == BondOrder.AROMATIC for o in orders):
            n_arom += 1
        else:
            n_aliph += 1
        if all(o == BondOrder.SINGLE for o in orders):
            n_sat += 1
    return StructuralCounts(
        HeavyAtomCount=sum(1 for a in graph.atoms if a.number > 1),
        NHOHCount=sum(a.total_h for a in graph.atoms if a.number in (7, 8)),
        NOCount=sum(1 for a in graph.atoms if a.number in (7, 8)),
        FractionCSP3=fraction_csp3(graph),
        NumAliphaticRings=n_aliph,
        NumAromaticRings=n_arom,
        NumSaturatedRings=n_sat,
        NumAmideBonds=num_amide_bonds(graph),
        NumRotatableBonds=num_rotatable_bonds(graph),
    )
