"""A small SMARTS subset for atom-typing tables.

Supported: bracket and bare atoms; primitives ``#n``, element symbols
(aliphatic upper case, aromatic lower case), ``A``, ``a``, ``*``, ``Hn``,
``Xn``, ``Dn`` and charges; the operators ``!``, ``&``, ``,`` and ``;``;
bond symbols ``- = # : ~`` with the usual single-or-aromatic default; and
branches.  Ring closures and recursive SMARTS are not supported.

Patterns are matched against a :class:`MatchTarget`, normally built with
hydrogens expanded into real nodes so that patterns such as ``[#1]O`` work.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from polymm.chem.elements import element, is_element_symbol
from polymm.chem.graph import BondOrder, MolecularGraph

_AROMATIC = 4


@dataclass
class MatchTarget:
    """Flat atom/bond view used by the matcher; ``order`` 4 means aromatic."""

    number: list[int]
    aromatic: list[bool]
    charge: list[int]
    hydrogens: list[int]
    adjacency: list[list[tuple[int, int]]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.number)

    def connections(self, i: int) -> int:
        return len(self.adjacency[i]) + self.hydrogens[i] - self._h_nodes(i)

    def _h_nodes(self, i: int) -> int:
        return sum(1 for j, _ in self.adjacency[i] if self.number[j] == 1)

    @classmethod
    def from_graph(cls, graph: MolecularGraph, expand_hydrogens: bool = True) -> MatchTarget:
        """Heavy atoms keep their graph indices; added H nodes follow them."""
        n = len(graph.atoms)
        t = cls(
            number=[a.number for a in graph.atoms],
            aromatic=[a.is_aromatic for a in graph.atoms],
            charge=[a.charge for a in graph.atoms],
            hydrogens=[a.total_h for a in graph.atoms],
            adjacency=[[] for _ in range(n)],
        )
        for b in graph.bonds:
            order = _AROMATIC if b.order == BondOrder.AROMATIC else int(b.order)
            t.adjacency[b.begin].append((b.end, order))
            t.adjacency[b.end].append((b.begin, order))
        if expand_hydrogens:
            for i, a in enumerate(graph.atoms):
                for _ in range(a.total_h):
                    h = len(t.number)
                    t.number.append(1)
                    t.aromatic.append(False)
                    t.charge.append(0)
                    t.hydrogens.append(0)
                    t.adjacency.append([(i, 1)])
                    t.adjacency[i].append((h, 1))
        return t


AtomTest = Callable[[MatchTarget, int], bool]
BondTest = Callable[[int], bool]


class SmartsSyntaxError(ValueError):
    pass


@dataclass
class Pattern:
    text: str
    atoms: list[AtomTest]
    # (parent pattern atom, child pattern atom, bond test) in creation order
    edges: list[tuple[int, int, BondTest]]

    def matches_at(self, target: MatchTarget, root: int) -> bool:
        """True if the pattern embeds with its first atom on ``root``."""
        if not self.atoms[0](target, root):
            return False
        mapping = [-1] * len(self.atoms)
        mapping[0] = root
        used = {root}

        def extend(k: int) -> bool:
            if k == len(self.edges):
                return True
            parent, child, bond_ok = self.edges[k]
            for j, order in target.adjacency[mapping[parent]]:
                if j in used or not bond_ok(order) or not self.atoms[child](target, j):
                    continue
                mapping[child] = j
                used.add(j)
                if extend(k + 1):
                    return True
                used.discard(j)
            return False

        return extend(0)


_BOND_TESTS: dict[str | None, BondTest] = {
    None: lambda o: o == 1 or o == _AROMATIC,
    "-": lambda o: o == 1,
    "=": lambda o: o == 2,
    "#": lambda o: o == 3,
    ":": lambda o: o == _AROMATIC,
    "~": lambda o: True,
}

_BARE = ("Cl", "Br", "C", "N", "O", "S", "P", "F", "I", "B", "c", "n", "o", "s", "p", "a", "A", "*")


def compile_smarts(text: str) -> Pattern:
    atoms: list[AtomTest] = []
    edges: list[tuple[int, int, BondTest]] = []
    stack: list[int] = []
    prev: int | None = None
    bond: str | None = None
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "[":
            end = text.find("]", i)
            if end < 0:
                raise SmartsSyntaxError(f"unterminated bracket in {text!r}")
            test = _bracket_expr(text[i + 1 : end])
            i = end + 1
        elif ch == "(":
            if prev is None:
                raise SmartsSyntaxError(f"branch before any atom in {text!r}")
            stack.append(prev)
            i += 1
            continue
        elif ch == ")":
            prev = stack.pop()
            i += 1
            continue
        elif ch in _BOND_TESTS:
            bond = ch
            i += 1
            continue
        else:
            sym = next((s for s in _BARE if text.startswith(s, i)), None)
            if sym is None:
                raise SmartsSyntaxError(f"unsupported token at {i} in {text!r}")
            test = _symbol_test(sym)
            i += len(sym)
        atoms.append(test)
        idx = len(atoms) - 1
        if prev is not None:
            edges.append((prev, idx, _BOND_TESTS[bond]))
        prev, bond = idx, None
    if not atoms or stack:
        raise SmartsSyntaxError(f"malformed pattern {text!r}")
    return Pattern(text, atoms, edges)


def _symbol_test(sym: str) -> AtomTest:
    if sym == "*":
        return lambda t, i: True
    if sym == "A":
        return lambda t, i: not t.aromatic[i]
    if sym == "a":
        return lambda t, i: t.aromatic[i]
    aromatic = sym[0].islower()
    z = element(sym.capitalize()).number
    return lambda t, i: t.number[i] == z and t.aromatic[i] == aromatic


def _bracket_expr(body: str) -> AtomTest:
    """Parse ``;`` (low and) > ``,`` (or) > ``&``/juxtaposition (high and) > ``!``."""
    low = [_or_expr(part) for part in body.split(";")]
    if len(low) == 1:
        return low[0]
    return lambda t, i: all(f(t, i) for f in low)


def _or_expr(body: str) -> AtomTest:
    alts = [_and_expr(part) for part in body.split(",")]
    if len(alts) == 1:
        return alts[0]
    return lambda t, i: any(f(t, i) for f in alts)


def _and_expr(body: str) -> AtomTest:
    tests: list[AtomTest] = []
    pos = 0
    first = True
    while pos < len(body):
        if body[pos] == "&":
            pos += 1
            continue
        negate = False
        while pos < len(body) and body[pos] == "!":
            negate = not negate
            pos += 1
        test, pos = _primitive(body, pos, first)
        first = False
        if negate:
            tests.append(lambda t, i, f=test: not f(t, i))
        else:
            tests.append(test)
    if not tests:
        raise SmartsSyntaxError(f"empty atom expression {body!r}")
    if len(tests) == 1:
        return tests[0]
    return lambda t, i: all(f(t, i) for f in tests)


def _read_int(body: str, pos: int, default: int) -> tuple[int, int]:
    end = pos
    while end < len(body) and body[end].isdigit():
        end += 1
    return (int(body[pos:end]) if end > pos else default), end


def _primitive(body: str, pos: int, first: bool) -> tuple[AtomTest, int]:
    ch = body[pos]
    if ch == "#":
        z, end = _read_int(body, pos + 1, -1)
        if z < 0:
            raise SmartsSyntaxError(f"'#' needs a number in {body!r}")
        return (lambda t, i: t.number[i] == z), end
    if ch in "+-":
        sign = 1 if ch == "+" else -1
        mag, end = _read_int(body, pos + 1, 1)
        charge = sign * mag
        return (lambda t, i: t.charge[i] == charge), end
    if ch == "H" and not first:
        n, end = _read_int(body, pos + 1, 1)
        return (lambda t, i: t.hydrogens[i] == n), end
    if ch == "X":
        n, end = _read_int(body, pos + 1, 1)
        return (lambda t, i: t.connections(i) == n), end
    if ch == "D":
        n, end = _read_int(body, pos + 1, 1)
        return (lambda t, i: len(t.adjacency[i]) == n), end
    two = body[pos : pos + 2]
    if len(two) == 2 and two[0].isupper() and two[1].islower() and is_element_symbol(two):
        return _symbol_test(two), pos + 2
    if ch in "*Aa":
        return _symbol_test(ch), pos + 1
    if ch.isalpha() and is_element_symbol(ch.upper()):
        return _symbol_test(ch), pos + 1
    raise SmartsSyntaxError(f"unsupported primitive at {pos} in {body!r}")
