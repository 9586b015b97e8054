"""Conjugation and hybridization perception on a parsed graph.

Hybridization comes from the steric number (neighbours + hydrogens + lone
pairs); four-coordinate atoms with fewer than four substituents drop to sp2
when one of their bonds is conjugated, as in amide nitrogens or the
hydroxyl oxygen of a carboxylic acid.
"""

from __future__ import annotations

from enum import IntEnum

from polymm.chem.elements import element
from polymm.chem.graph import BondOrder, MolecularGraph


class Hybridization(IntEnum):
    UNSPECIFIED = 0
    S = 1
    SP = 2
    SP2 = 3
    SP3 = 4
    SP3D = 5
    SP3D2 = 6


def _pi_electrons(graph: MolecularGraph, i: int) -> int:
    """Electrons atom ``i`` could put into a pi system; -1 if it cannot take part."""
    a = graph.atoms[i]
    if a.number == 0:
        return -1
    el = element(a.number)
    dv = el.default_valence
    if dv <= 1:
        return -1
    degree = graph.degree(i) + a.total_h
    if degree > 3:
        return -1
    lone = max(el.outer_electrons - dv - a.charge, 0)
    return (dv - degree) + lone


def _conjugation_candidate(graph: MolecularGraph, i: int) -> bool:
    a = graph.atoms[i]
    if a.number == 0:
        return False
    nouter = element(a.number).outer_electrons
    # heavier N/O-group atoms (P, S, ...) only join when singly connected, hydrogens included
    row_ok = a.number <= 10 or nouter not in (5, 6) or (nouter == 6 and graph.degree(i) + a.total_h < 2)
    return row_ok and _pi_electrons(graph, i) > 0


def conjugated_bonds(graph: MolecularGraph) -> frozenset[int]:
    """Indices of bonds that are aromatic or part of a conjugated path."""
    conj = {b.index for b in graph.bonds if b.order == BondOrder.AROMATIC}
    candidate = [_conjugation_candidate(graph, i) for i in range(len(graph.atoms))]
    subs = [graph.degree(i) + a.total_h for i, a in enumerate(graph.atoms)]
    for i in range(len(graph.atoms)):
        if not candidate[i] or not 2 <= subs[i] <= 3:
            continue
        incident = graph.incident(i)
        for b1 in incident:
            if b1.order == BondOrder.SINGLE:
                continue
            for b2 in incident:
                if b2 is b1:
                    continue
                j = b2.other(i)
                if subs[j] > 3 or not candidate[j]:
                    continue
                conj.add(b1.index)
                conj.add(b2.index)
    return frozenset(conj)


def hybridizations(graph: MolecularGraph) -> list[Hybridization]:
    conj = conjugated_bonds(graph)
    out = []
    for i, a in enumerate(graph.atoms):
        if a.number == 0:
            out.append(Hybridization.UNSPECIFIED)
            continue
        total_degree = graph.degree(i) + a.total_h
        if a.number == 1:
            norbs = total_degree
        else:
            valence = sum(b.kekule_order for b in graph.incident(i)) + a.total_h
            free = element(a.number).outer_electrons - valence - a.charge
            norbs = total_degree + int(free / 2)
        if norbs <= 1:
            hyb = Hybridization.S
        elif norbs == 2:
            hyb = Hybridization.SP
        elif norbs == 3:
            hyb = Hybridization.SP2
        elif norbs == 4:
            has_conj = any(b.index in conj for b in graph.incident(i))
            hyb = Hybridization.SP2 if (total_degree < 4 and has_conj) else Hybridization.SP3
        elif norbs == 5:
            hyb = Hybridization.SP3D
        elif norbs == 6:
            hyb = Hybridization.SP3D2
        else:
            hyb = Hybridization.UNSPECIFIED
        out.append(hyb)
    return out
