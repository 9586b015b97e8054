"""Polar surface area (fragment contributions) and Labute's approximate surface area."""

from __future__ import annotations

import math

from polymm.chem import BondOrder, MolecularGraph
from polymm.chem.elements import element
from polymm.descriptors.errors import UnclassifiedFragment
from polymm.descriptors.tables import tpsa_rules, vsa_parameters


def _tpsa_key(graph: MolecularGraph, i: int) -> tuple:
    a = graph.atoms[i]
    counts = {BondOrder.SINGLE: 0, BondOrder.DOUBLE: 0, BondOrder.TRIPLE: 0, BondOrder.AROMATIC: 0}
    for b in graph.incident(i):
        counts[b.order] += 1
    in3 = any(len(r) == 3 and i in r for r in graph.rings)
    return (
        a.symbol,
        graph.degree(i),
        a.total_h,
        a.charge,
        counts[BondOrder.SINGLE],
        counts[BondOrder.DOUBLE],
        counts[BondOrder.TRIPLE],
        counts[BondOrder.AROMATIC],
        in3,
    )


def tpsa_contributions(graph: MolecularGraph) -> list[float]:
    """Per-atom polar surface contributions; zero for anything but N and O.

    Raises:
        UnclassifiedFragment: an N or O environment with no table row.
    """
    rules = tpsa_rules()
    out = []
    for i, a in enumerate(graph.atoms):
        if a.number not in (7, 8):
            out.append(0.0)
            continue
        key = _tpsa_key(graph, i)
        rule = next((r for r in rules if r.matches(key)), None)
        if rule is None:
            raise UnclassifiedFragment(
                f"atom {i} ({a.symbol}, {key[1]} neighbours, {a.total_h} H, charge {a.charge}) has no polar surface entry",
                i,
            )
        out.append(rule.value)
    return out


def tpsa(graph: MolecularGraph) -> float:
    return sum(tpsa_contributions(graph))


def labute_asa(graph: MolecularGraph) -> float:
    """Labute's approximate surface area.

    Each atom is a sphere of its bond radius, reduced by the caps cut off by
    bonded neighbours.  Hydrogens are folded in as one correction term per
    heavy atom plus one aggregate hydrogen sphere, independent of the actual
    hydrogen count; that is the convention of the reference parameterization.
    """
    p = vsa_parameters()
    correction = {
        BondOrder.SINGLE: p["correction_single"],
        BondOrder.DOUBLE: p["correction_double"],
        BondOrder.TRIPLE: p["correction_triple"],
        BondOrder.AROMATIC: p["correction_aromatic"],
    }
    radii = [element(a.number).bond_radius for a in graph.atoms]
    buried = [0.0] * len(radii)

    def cap(ri: float, rj: float, bij: float) -> tuple[float, float]:
        dij = min(max(abs(ri - rj), bij), ri + rj)
        if dij == 0.0:
            return 0.0, 0.0
        return rj * rj - (ri - dij) ** 2 / dij, ri * ri - (rj - dij) ** 2 / dij

    for b in graph.bonds:
        ri, rj = radii[b.begin], radii[b.end]
        vi, vj = cap(ri, rj, ri + rj - correction[b.order])
        buried[b.begin] += vi
        buried[b.end] += vj

    rh = p["hydrogen_radius"]
    h_buried = 0.0
    for i, ri in enumerate(radii):
        vi, vh = cap(ri, rh, ri + rh)
        buried[i] += vi
        h_buried += vh

    total = sum(math.pi * r * (4.0 * r - v) for r, v in zip(radii, buried))
    return total + math.pi * rh * (4.0 * rh - h_buried)
