"""Canonical atom ranking and canonical P-SMILES output.

Ranks come from iterative invariant refinement: atoms are seeded by a tuple
of local invariants, then repeatedly re-ranked by their own rank plus the
sorted ranks (and bond orders) of their neighbours.  Remaining ties are
broken by promoting the lowest-index atom of the lowest tied class and
refining again.  The writer emits a depth-first SMILES walk that always
starts at rank 0 and visits neighbours in rank order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from polymm.chem import MolecularGraph, parse
from polymm.chem.elements import AROMATIC_SYMBOLS, ORGANIC_SUBSET, ORGANIC_VALENCES
from polymm.chem.graph import Bond, BondOrder

_AROMATIC_OUT = {v: k for k, v in AROMATIC_SYMBOLS.items()}


@dataclass(frozen=True)
class CanonicalForm:
    smiles: str
    # graph atom indices in the order they appear in ``smiles``
    atom_order: tuple[int, ...]


def _seed_invariants(graph: MolecularGraph) -> list[tuple]:
    ring_atoms = graph.ring_atoms
    return [
        (
            a.number,
            graph.degree(a.index),
            a.charge,
            a.is_aromatic,
            a.index in ring_atoms,
            a.total_h,
            a.isotope or 0,
        )
        for a in graph.atoms
    ]


def _dense_ranks(keys: Sequence) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refine(graph: MolecularGraph, ranks: list[int]) -> list[int]:
    n_classes = len(set(ranks))
    while True:
        keys = []
        for i in range(len(graph.atoms)):
            nbr = sorted((ranks[j], int(graph.bond_between(i, j).order)) for j in graph.neighbors(i))
            keys.append((ranks[i], tuple(nbr)))
        new = _dense_ranks(keys)
        n_new = len(set(new))
        if n_new == n_classes:
            return new
        ranks, n_classes = new, n_new


def canonical_ranks(graph: MolecularGraph) -> list[int]:
    """Total order over atoms, invariant to input atom numbering."""
    ranks = _refine(graph, _dense_ranks(_seed_invariants(graph)))
    n = len(ranks)
    while len(set(ranks)) < n:
        seen: dict[int, list[int]] = {}
        for i, r in enumerate(ranks):
            seen.setdefault(r, []).append(i)
        tied_rank = min(r for r, members in seen.items() if len(members) > 1)
        promoted = min(seen[tied_rank])
        keys = [(2 * r + (0 if (r != tied_rank or i == promoted) else 1)) for i, r in enumerate(ranks)]
        ranks = _refine(graph, _dense_ranks(keys))
    return ranks


def _default_h(number: int, aromatic: bool, used: int) -> int | None:
    """Hydrogens a reader will infer for an unbracketed atom, or None if it cannot be bare."""
    from polymm.chem.elements import element

    sym = element(number).symbol
    if sym not in ORGANIC_SUBSET:
        return None
    vals = ORGANIC_VALENCES[sym]
    if aromatic:
        return max(vals[0] - used - 1, 0) if used + 1 <= vals[0] else max(vals[0] - used, 0)
    for v in vals:
        if v >= used:
            return v - used
    return None


def _bond_text(graph: MolecularGraph, bond: Bond) -> str:
    a, b = graph.atoms[bond.begin], graph.atoms[bond.end]
    if bond.order == BondOrder.AROMATIC:
        return ""
    if bond.order == BondOrder.SINGLE:
        return "-" if (a.is_aromatic and b.is_aromatic) else ""
    return bond.order.symbol


def _atom_text(graph: MolecularGraph, i: int) -> str:
    a = graph.atoms[i]
    if a.is_wildcard:
        if a.charge or a.isotope or a.total_h:
            return _bracket(graph, i, "*")
        return "*"
    sym = a.symbol
    written = _AROMATIC_OUT.get(sym, sym.lower()) if a.is_aromatic else sym
    if not a.charge and a.isotope is None and sym in ORGANIC_SUBSET:
        used = 0
        for b in graph.incident(i):
            if b.order == BondOrder.AROMATIC:
                used += 1
            elif b.order == BondOrder.SINGLE:
                used += 1
            else:
                used += int(b.order)
        if _default_h(a.number, a.is_aromatic, used) == a.total_h:
            return written
    return _bracket(graph, i, written)


def _bracket(graph: MolecularGraph, i: int, written: str) -> str:
    a = graph.atoms[i]
    out = "["
    if a.isotope is not None:
        out += str(a.isotope)
    out += written
    if a.total_h == 1:
        out += "H"
    elif a.total_h > 1:
        out += f"H{a.total_h}"
    if a.charge:
        sign = "+" if a.charge > 0 else "-"
        out += sign if abs(a.charge) == 1 else f"{sign}{abs(a.charge)}"
    return out + "]"


def write_smiles(graph: MolecularGraph, ranks: Sequence[int]) -> CanonicalForm:
    """Emit SMILES for ``graph`` by a DFS that follows ``ranks``.

    With canonical ranks the output is canonical; with shuffled ranks it is
    a random valid spelling of the same molecule.
    """
    n = len(graph.atoms)
    start = min(range(n), key=lambda i: ranks[i])

    # pass 1: DFS tree and ring-closure bonds
    parent = {start: -1}
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    closures: dict[int, list[int]] = {i: [] for i in range(n)}
    visit_order: list[int] = []
    stack = [(start, iter(sorted(graph.neighbors(start), key=lambda j: ranks[j])))]
    visit_order.append(start)
    on_path = {start}
    while stack:
        v, it = stack[-1]
        advanced = False
        for w in it:
            if w == parent[v]:
                continue
            if w in parent:
                # back edge: record once, from the atom visited later
                if w in on_path and w not in closures[v] and v not in closures[w]:
                    closures[w].append(v)
                    closures[v].append(w)
                continue
            parent[w] = v
            children[v].append(w)
            visit_order.append(w)
            on_path.add(w)
            stack.append((w, iter(sorted(graph.neighbors(w), key=lambda j: ranks[j]))))
            advanced = True
            break
        if not advanced:
            stack.pop()
            on_path.discard(v)

    position = {a: k for k, a in enumerate(visit_order)}
    out: list[str] = []
    digits_in_use: dict[tuple[int, int], int] = {}
    free_digits: list[int] = []
    next_digit = [1]

    def take_digit() -> int:
        if free_digits:
            free_digits.sort()
            return free_digits.pop(0)
        d = next_digit[0]
        next_digit[0] += 1
        return d

    def digit_text(d: int) -> str:
        return str(d) if d < 10 else f"%{d}"

    def emit(v: int) -> None:
        out.append(_atom_text(graph, v))
        # closing digits first (partner already written), then openings by partner position
        ring_partners = sorted(closures[v], key=lambda w: position[w])
        for w in ring_partners:
            key = (min(v, w), max(v, w))
            if key in digits_in_use:
                d = digits_in_use.pop(key)
                out.append(digit_text(d))
                free_digits.append(d)
        for w in ring_partners:
            key = (min(v, w), max(v, w))
            if position[w] > position[v] and key not in digits_in_use:
                d = take_digit()
                digits_in_use[key] = d
                out.append(_bond_text(graph, graph.bond_between(v, w)) + digit_text(d))
        kids = children[v]
        for k, w in enumerate(kids):
            bond = _bond_text(graph, graph.bond_between(v, w))
            if k < len(kids) - 1:
                out.append("(" + bond)
                emit(w)
                out.append(")")
            else:
                out.append(bond)
                emit(w)

    emit(start)
    return CanonicalForm("".join(out), tuple(visit_order))


def write_canonical(graph: MolecularGraph) -> CanonicalForm:
    return write_smiles(graph, canonical_ranks(graph))


def canonicalize(smiles: str) -> str:
    """Canonical P-SMILES for any valid spelling of a molecule."""
    return write_canonical(parse(smiles)).smiles


def random_smiles(graph: MolecularGraph, rng: random.Random) -> str:
    """A random valid spelling of ``graph`` (random start atom and branch order)."""
    ranks = list(range(len(graph.atoms)))
    rng.shuffle(ranks)
    return write_smiles(graph, ranks).smiles


def permute_graph(graph: MolecularGraph, perm: Sequence[int]) -> MolecularGraph:
    """Renumber atoms so that old atom ``i`` becomes ``perm[i]``."""
    from dataclasses import replace

    inverse = [0] * len(perm)
    for old, new in enumerate(perm):
        inverse[new] = old
    atoms = tuple(replace(graph.atoms[inverse[k]], index=k) for k in range(len(perm)))
    bonds = tuple(replace(b, begin=perm[b.begin], end=perm[b.end]) for b in graph.bonds)
    rings = tuple(tuple(perm[a] for a in r) for r in graph.rings)
    return MolecularGraph(atoms=atoms, bonds=bonds, rings=rings, source_smiles=graph.source_smiles)
