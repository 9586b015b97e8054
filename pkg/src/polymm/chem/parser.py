"""SMILES/P-SMILES parser producing validated :class:`MolecularGraph` objects."""

from __future__ import annotations

from dataclasses import dataclass, field

from polymm.chem.aromaticity import AtomView, kekulize, perceive
from polymm.chem.elements import ORGANIC_VALENCES, charged_valences, element
from polymm.chem.errors import (
    DisconnectedInput,
    InvalidBond,
    KekulizationFailure,
    UnmatchedParenthesis,
    UnmatchedRingClosure,
    ValenceExceeded,
)
from polymm.chem.graph import Atom, Bond, BondOrder, MolecularGraph
from polymm.chem.rings import sssr_from_edges
from polymm.chem.tokenizer import Token, TokenKind, tokenize

_BOND_SYMBOL_ORDER = {"-": 1, "/": 1, "\\": 1, "=": 2, "#": 3, ":": 4}


@dataclass
class _RawAtom:
    token: Token
    bonds: list[int] = field(default_factory=list)
    explicit_h: int = 0


@dataclass
class _RawBond:
    begin: int
    end: int
    symbol: str | None
    position: int


def parse(smiles: str) -> MolecularGraph:
    """Parse a SMILES or P-SMILES string.

    Example:
        >>> g = parse("*CC*")
        >>> [a.implicit_h for a in g.atoms]
        [0, 2, 2, 0]

    Raises:
        ChemError subclasses, each carrying the offending offset where one
        exists.  A graph is only returned when every check passes.
    """
    smiles = smiles.strip()
    tokens = tokenize(smiles)
    raw_atoms, raw_bonds = _build(tokens)
    raw_atoms, raw_bonds = _fold_hydrogens(raw_atoms, raw_bonds)
    _check_connected(raw_atoms, raw_bonds, tokens)
    return _finish(smiles, raw_atoms, raw_bonds)


def _build(tokens: list[Token]) -> tuple[list[_RawAtom], list[_RawBond]]:
    atoms: list[_RawAtom] = []
    bonds: list[_RawBond] = []
    pairs: set[tuple[int, int]] = set()
    stack: list[int] = []
    open_parens: list[int] = []
    rings: dict[int, tuple[int, str | None, int]] = {}
    prev: int | None = None
    pending_bond: tuple[str, int] | None = None

    def add_bond(a: int, b: int, symbol: str | None, pos: int) -> None:
        key = (min(a, b), max(a, b))
        if a == b or key in pairs:
            raise InvalidBond(f"duplicate or self bond between atoms {a} and {b}", pos)
        pairs.add(key)
        bonds.append(_RawBond(a, b, symbol, pos))
        atoms[a].bonds.append(len(bonds) - 1)
        atoms[b].bonds.append(len(bonds) - 1)

    for tok in tokens:
        kind = tok.kind
        if kind in (TokenKind.ATOM, TokenKind.WILDCARD):
            atoms.append(_RawAtom(tok, explicit_h=tok.hcount or 0))
            idx = len(atoms) - 1
            if prev is not None:
                sym, pos = pending_bond if pending_bond else (None, tok.position)
                add_bond(prev, idx, sym, pos)
            elif pending_bond is not None:
                raise InvalidBond("bond symbol without a preceding atom", pending_bond[1])
            pending_bond = None
            prev = idx
        elif kind == TokenKind.BOND:
            if pending_bond is not None or prev is None:
                raise InvalidBond(f"misplaced bond symbol {tok.text!r}", tok.position)
            pending_bond = (tok.text, tok.position)
        elif kind == TokenKind.RING:
            if prev is None:
                raise InvalidBond("ring closure before any atom", tok.position)
            digit = tok.digit
            sym = pending_bond[0] if pending_bond else None
            pending_bond = None
            if digit in rings:
                other, other_sym, pos = rings.pop(digit)
                if sym and other_sym and _BOND_SYMBOL_ORDER[sym] != _BOND_SYMBOL_ORDER[other_sym]:
                    raise InvalidBond(f"ring closure {digit} has conflicting bond symbols", tok.position)
                add_bond(other, prev, sym or other_sym, tok.position)
            else:
                rings[digit] = (prev, sym, tok.position)
        elif kind == TokenKind.BRANCH_OPEN:
            if prev is None or pending_bond is not None:
                raise UnmatchedParenthesis("branch opened without an anchor atom", tok.position)
            stack.append(prev)
            open_parens.append(tok.position)
        elif kind == TokenKind.BRANCH_CLOSE:
            if not stack:
                raise UnmatchedParenthesis("')' without matching '('", tok.position)
            if pending_bond is not None:
                raise InvalidBond("bond symbol before ')'", pending_bond[1])
            prev = stack.pop()
            open_parens.pop()
        elif kind == TokenKind.DOT:
            raise DisconnectedInput("'.' separates disconnected fragments", tok.position)
    if pending_bond is not None:
        raise InvalidBond("dangling bond symbol", pending_bond[1])
    if stack:
        raise UnmatchedParenthesis("'(' is never closed", open_parens[-1])
    if rings:
        digit = min(rings, key=lambda d: rings[d][2])
        raise UnmatchedRingClosure(digit, rings[digit][2])
    return atoms, bonds


def _fold_hydrogens(atoms: list[_RawAtom], bonds: list[_RawBond]) -> tuple[list[_RawAtom], list[_RawBond]]:
    """Turn plain ``[H]`` atoms hanging off a heavy atom into explicit H counts."""
    drop: set[int] = set()
    for i, at in enumerate(atoms):
        tok = at.token
        if tok.number != 1 or tok.charge or tok.isotope or at.explicit_h or len(at.bonds) != 1:
            continue
        bond = bonds[at.bonds[0]]
        other = bond.end if bond.begin == i else bond.begin
        if atoms[other].token.number == 1 or _BOND_SYMBOL_ORDER.get(bond.symbol or "-", 1) != 1:
            continue
        drop.add(i)
        atoms[other].explicit_h += 1
    if not drop:
        return atoms, bonds
    remap: dict[int, int] = {}
    new_atoms: list[_RawAtom] = []
    for i, at in enumerate(atoms):
        if i not in drop:
            remap[i] = len(new_atoms)
            new_atoms.append(_RawAtom(at.token, [], at.explicit_h))
    new_bonds: list[_RawBond] = []
    for b in bonds:
        if b.begin in drop or b.end in drop:
            continue
        nb = _RawBond(remap[b.begin], remap[b.end], b.symbol, b.position)
        new_bonds.append(nb)
        new_atoms[nb.begin].bonds.append(len(new_bonds) - 1)
        new_atoms[nb.end].bonds.append(len(new_bonds) - 1)
    return new_atoms, new_bonds


def _check_connected(atoms: list[_RawAtom], bonds: list[_RawBond], tokens: list[Token]) -> None:
    if not atoms:
        raise DisconnectedInput("no atoms", 0)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for b in atoms[v].bonds:
            w = bonds[b].end if bonds[b].begin == v else bonds[b].begin
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != len(atoms):
        first = min(i for i in range(len(atoms)) if i not in seen)
        raise DisconnectedInput("input contains more than one fragment", atoms[first].token.position)


def _initial_order(bond: _RawBond, atoms: list[_RawAtom]) -> int:
    a, b = atoms[bond.begin].token, atoms[bond.end].token
    if bond.symbol is None:
        return 4 if a.aromatic and b.aromatic else 1
    order = _BOND_SYMBOL_ORDER[bond.symbol]
    if order == 4 and not (a.aromatic and b.aromatic):
        raise InvalidBond("aromatic bond between non-aromatic atoms", bond.position)
    return order


def _implicit_h(i: int, at: _RawAtom, orders: list[int]) -> int:
    tok = at.token
    if tok.bracket or tok.number == 0:
        return 0
    vals = ORGANIC_VALENCES[element(tok.number).symbol]
    n_arom = sum(1 for b in at.bonds if orders[b] == 4)
    used = sum(orders[b] for b in at.bonds if orders[b] != 4) + n_arom + at.explicit_h
    if tok.aromatic:
        # aromatic atoms use their default valence, keeping one slot for the pi bond when possible
        return max(vals[0] - used - 1, 0) if used + 1 <= vals[0] else max(vals[0] - used, 0)
    for v in vals:
        if v >= used:
            return v - used
    raise ValenceExceeded(i, f"atom {i} ({tok.text}) has valence {used}, above {vals[-1]}", tok.position)


def _finish(smiles: str, raw_atoms: list[_RawAtom], raw_bonds: list[_RawBond]) -> MolecularGraph:
    orders = [_initial_order(b, raw_atoms) for b in raw_bonds]
    hydrogens = [_implicit_h(i, a, orders) for i, a in enumerate(raw_atoms)]
    pairs = [(b.begin, b.end) for b in raw_bonds]

    views = []
    for i, a in enumerate(raw_atoms):
        nbrs = [pairs[b][1] if pairs[b][0] == i else pairs[b][0] for b in a.bonds]
        views.append(
            AtomView(
                number=a.token.number,
                charge=a.token.charge,
                aromatic_input=a.token.aromatic,
                total_h=a.explicit_h + hydrogens[i],
                neighbors=nbrs,
                bonds=list(a.bonds),
            )
        )

    aromatic_in = {k for k, o in enumerate(orders) if o == 4}
    fixed = {k: o for k, o in enumerate(orders) if o != 4}
    chosen = kekulize(views, pairs, aromatic_in, fixed)
    kekule = [chosen.get(k, orders[k]) for k in range(len(orders))]

    for i, v in enumerate(views):
        allowed = charged_valences(v.number, v.charge)
        if allowed is None:
            continue
        used = sum(kekule[b] for b in v.bonds) + v.total_h
        if used > max(allowed):
            tok = raw_atoms[i].token
            raise ValenceExceeded(i, f"atom {i} ({tok.text}) has valence {used}, above {max(allowed)}", tok.position)

    rings = sssr_from_edges(len(raw_atoms), pairs)
    arom_atoms, arom_bonds = perceive(views, pairs, kekule, rings)

    lost = [i for i, a in enumerate(raw_atoms) if a.token.aromatic and i not in arom_atoms]
    if lost:
        tok = raw_atoms[lost[0]].token
        raise KekulizationFailure(
            f"atom {lost[0]} ({tok.text}) is written aromatic but no ring through it passes the 4n+2 rule",
            tok.position,
        )

    ring_bond_ids = set()
    lookup = {}
    for k, (x, y) in enumerate(pairs):
        lookup[(x, y)] = k
        lookup[(y, x)] = k
    for r in rings:
        for j in range(len(r)):
            ring_bond_ids.add(lookup[(r[j], r[(j + 1) % len(r)])])

    atoms = tuple(
        Atom(
            index=i,
            number=a.token.number,
            charge=a.token.charge,
            is_aromatic=i in arom_atoms,
            explicit_h=a.explicit_h,
            implicit_h=hydrogens[i],
            isotope=a.token.isotope,
            bracket=a.token.bracket,
        )
        for i, a in enumerate(raw_atoms)
    )
    bonds = tuple(
        Bond(
            index=k,
            begin=b.begin,
            end=b.end,
            order=BondOrder.AROMATIC if k in arom_bonds else BondOrder(kekule[k]),
            kekule_order=kekule[k],
            in_ring=k in ring_bond_ids,
        )
        for k, b in enumerate(raw_bonds)
    )
    n_star = sum(1 for a in atoms if a.number == 0)
    flag = None if n_star == 2 else f"expected 2 attachment points, found {n_star}"
    return MolecularGraph(atoms=atoms, bonds=bonds, rings=tuple(rings), source_smiles=smiles, polymer_flag=flag)
