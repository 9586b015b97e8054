"""Wildman-Crippen logP by first-match atom typing."""

from __future__ import annotations

from polymm.chem import MolecularGraph
from polymm.chem.smarts import MatchTarget
from polymm.descriptors.errors import UnclassifiedAtomType
from polymm.descriptors.tables import crippen_types


def crippen_atom_types(graph: MolecularGraph) -> list[tuple[str, float] | None]:
    """Type label and logP contribution for every node of the H-expanded graph.

    Heavy atoms keep their indices; implicit hydrogens follow in atom order.
    Wildcards are left untyped (``None``).

    Raises:
        UnclassifiedAtomType: a real atom that no table row matches.
    """
    target = MatchTarget.from_graph(graph, expand_hydrogens=True)
    types = crippen_types()
    out: list[tuple[str, float] | None] = []
    for i in range(target.size):
        if target.number[i] == 0:
            out.append(None)
            continue
        hit = next((t for t in types if t.pattern.matches_at(target, i)), None)
        if hit is None:
            raise UnclassifiedAtomType(f"atom {i} (Z={target.number[i]}) matches no logP atom type", i)
        out.append((hit.label, hit.logp))
    return out


def mol_logp(graph: MolecularGraph) -> float:
    return sum(t[1] for t in crippen_atom_types(graph) if t is not None)
