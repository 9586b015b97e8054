"""Per-atom additive descriptors: molecular weight and Hall-Kier alpha."""

from __future__ import annotations

from polymm.chem import MolecularGraph
from polymm.chem.elements import HYDROGEN_WEIGHT, element
from polymm.chem.perception import Hybridization, hybridizations
from polymm.descriptors.errors import UnclassifiedAtomType
from polymm.descriptors.tables import hall_kier_table


def mol_wt(graph: MolecularGraph) -> float:
    """Average molecular weight; wildcards weigh nothing and carry no hydrogens.

    >>> from polymm.chem import parse
    >>> round(mol_wt(parse("C")), 3)
    16.043
    """
    heavy = sum(element(a.number).weight for a in graph.atoms if a.number)
    n_h = sum(a.total_h for a in graph.atoms)
    return heavy + HYDROGEN_WEIGHT * n_h


def hall_kier_alpha(graph: MolecularGraph) -> float:
    """Sum over real atoms of the covalent-radius deviation from sp3 carbon."""
    table = hall_kier_table()
    r_c = element(6).bond_radius
    hybs = hybridizations(graph)
    total = 0.0
    for i, a in enumerate(graph.atoms):
        if a.number == 0:
            continue
        el = element(a.number)
        row = table.get(el.symbol)
        if row is not None:
            if hybs[i] == Hybridization.SP and row[0] is not None:
                total += row[0]
            elif hybs[i] == Hybridization.SP2 and row[1] is not None:
                total += row[1]
            else:
                total += row[2]
        elif el.bond_radius > 0:
            total += el.bond_radius / r_c - 1.0
        else:
            raise UnclassifiedAtomType(f"atom {i} ({el.symbol}) has no covalent radius", i)
    return total
