"""Immutable molecular graph produced by :func:`polymm.chem.parse`."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property

from polymm.chem.elements import AROMATIC_SYMBOLS, element


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def symbol(self) -> str:
        return {1: "-", 2: "=", 3: "#", 4: ":"}[self.value]


@dataclass(frozen=True)
class Atom:
    index: int
    number: int
    charge: int = 0
    is_aromatic: bool = False
    explicit_h: int = 0
    implicit_h: int = 0
    isotope: int | None = None
    bracket: bool = False

    @property
    def symbol(self) -> str:
        return element(self.number).symbol

    @property
    def is_wildcard(self) -> bool:
        return self.number == 0

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass(frozen=True)
class Bond:
    index: int
    begin: int
    end: int
    order: BondOrder
    # alternating single/double assignment; equals order for non-aromatic bonds
    kekule_order: int
    in_ring: bool = False

    @property
    def is_aromatic(self) -> bool:
        return self.order == BondOrder.AROMATIC

    def other(self, atom: int) -> int:
        return self.end if atom == self.begin else self.begin

    @property
    def valence_contrib(self) -> float:
        return 1.5 if self.order == BondOrder.AROMATIC else float(self.order)


@dataclass(frozen=True)
class MolecularGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    rings: tuple[tuple[int, ...], ...] = ()
    source_smiles: str = ""
    # fewer or more than two attachment points; advisory only
    polymer_flag: str | None = field(default=None, compare=False)

    @cached_property
    def _adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            adj[b.begin].append((b.end, b.index))
            adj[b.end].append((b.begin, b.index))
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def _bond_lookup(self) -> dict[tuple[int, int], int]:
        out = {}
        for b in self.bonds:
            out[(b.begin, b.end)] = b.index
            out[(b.end, b.begin)] = b.index
        return out

    def __len__(self) -> int:
        return len(self.atoms)

    def neighbors(self, atom: int) -> list[int]:
        return [n for n, _ in self._adjacency[atom]]

    def incident(self, atom: int) -> list[Bond]:
        return [self.bonds[b] for _, b in self._adjacency[atom]]

    def degree(self, atom: int) -> int:
        return len(self._adjacency[atom])

    def bond_between(self, a: int, b: int) -> Bond | None:
        idx = self._bond_lookup.get((a, b))
        return None if idx is None else self.bonds[idx]

    @property
    def cyclomatic_number(self) -> int:
        return len(self.bonds) - len(self.atoms) + 1

    @cached_property
    def ring_atoms(self) -> frozenset[int]:
        return frozenset(a for r in self.rings for a in r)

    def ring_bonds(self, ring: tuple[int, ...]) -> list[Bond]:
        return [self.bond_between(ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring))]

    @property
    def num_wildcards(self) -> int:
        return sum(1 for a in self.atoms if a.is_wildcard)

    def atom_label(self, atom: int) -> str:
        a = self.atoms[atom]
        if a.is_wildcard:
            return "*"
        sym = a.symbol
        if a.is_aromatic:
            lower = {v: k for k, v in AROMATIC_SYMBOLS.items()}
            return lower.get(sym, sym.lower())
        return sym
