"""Lexer for SMILES strings extended with ``*`` attachment points.

Stereo markers (``/``, ``\\``, ``@``) and atom classes are lexed so that the
input is accepted, but carry no meaning downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from polymm.chem.elements import AROMATIC_SYMBOLS, ORGANIC_SUBSET, element, is_element_symbol
from polymm.chem.errors import (
    EmptyInput,
    InvalidBracketAtom,
    UnknownCharacter,
    UnterminatedBracket,
)


class TokenKind(str, Enum):
    ATOM = "atom"
    WILDCARD = "wildcard"
    BOND = "bond"
    RING = "ring"
    BRANCH_OPEN = "branch_open"
    BRANCH_CLOSE = "branch_close"
    DOT = "dot"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    position: int
    # atom payload; unused for other kinds
    number: int = 0
    aromatic: bool = False
    bracket: bool = False
    isotope: int | None = None
    charge: int = 0
    hcount: int | None = None
    # ring payload
    digit: int | None = None


BOND_SYMBOLS = frozenset("-=#:/\\")


def tokenize(smiles: str) -> list[Token]:
    """Split a (P-)SMILES string into tokens.

    Raises:
        EmptyInput: blank input.
        UnknownCharacter: a character outside the grammar, with its offset.
        UnterminatedBracket: ``[`` without a matching ``]``.
    """
    if not smiles or not smiles.strip():
        raise EmptyInput("empty SMILES string", 0)
    tokens: list[Token] = []
    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            end = smiles.find("]", i + 1)
            if end < 0:
                raise UnterminatedBracket("'[' is never closed", i)
            tokens.append(_bracket_atom(smiles[i + 1 : end], i))
            i = end + 1
        elif ch == "*":
            tokens.append(Token(TokenKind.WILDCARD, "*", i, number=0, aromatic=False))
            i += 1
        elif ch in "BCNOPSFI":
            two = smiles[i : i + 2]
            sym = two if two in ("Cl", "Br") else ch
            tokens.append(Token(TokenKind.ATOM, sym, i, number=element(sym).number))
            i += len(sym)
        elif ch in "bcnops":
            tokens.append(
                Token(TokenKind.ATOM, ch, i, number=element(AROMATIC_SYMBOLS[ch]).number, aromatic=True)
            )
            i += 1
        elif ch.isdigit():
            tokens.append(Token(TokenKind.RING, ch, i, digit=int(ch)))
            i += 1
        elif ch == "%":
            digits = smiles[i + 1 : i + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise UnknownCharacter("'%' must be followed by two digits", i)
            tokens.append(Token(TokenKind.RING, smiles[i : i + 3], i, digit=int(digits)))
            i += 3
        elif ch in BOND_SYMBOLS:
            tokens.append(Token(TokenKind.BOND, ch, i))
            i += 1
        elif ch == "(":
            tokens.append(Token(TokenKind.BRANCH_OPEN, ch, i))
            i += 1
        elif ch == ")":
            tokens.append(Token(TokenKind.BRANCH_CLOSE, ch, i))
            i += 1
        elif ch == ".":
            tokens.append(Token(TokenKind.DOT, ch, i))
            i += 1
        else:
            raise UnknownCharacter(f"unexpected character {ch!r}", i)
    return tokens


def _bracket_atom(body: str, start: int) -> Token:
    """Parse the inside of ``[...]``; ``start`` is the offset of ``[``."""
    pos = 0
    text = f"[{body}]"

    def fail(msg: str) -> InvalidBracketAtom:
        return InvalidBracketAtom(msg, start + 1 + pos)

    digits = ""
    while pos < len(body) and body[pos].isdigit():
        digits += body[pos]
        pos += 1
    isotope = int(digits) if digits else None

    if pos >= len(body):
        raise fail("bracket atom has no element")
    aromatic = False
    if body[pos] == "*":
        number = 0
        pos += 1
    else:
        two = body[pos : pos + 2]
        one = body[pos : pos + 1]
        if len(two) == 2 and two in AROMATIC_SYMBOLS:
            number, aromatic, pos = element(AROMATIC_SYMBOLS[two]).number, True, pos + 2
        elif len(two) == 2 and two[1].islower() and is_element_symbol(two):
            number, pos = element(two).number, pos + 2
        elif one in AROMATIC_SYMBOLS:
            number, aromatic, pos = element(AROMATIC_SYMBOLS[one]).number, True, pos + 1
        elif one.isupper() and is_element_symbol(one):
            number, pos = element(one).number, pos + 1
        else:
            raise fail(f"unknown element in {text!r}")

    # chirality: @, @@, @TH1, @AL2, @SP3, @TB12, @OH30
    if pos < len(body) and body[pos] == "@":
        pos += 1
        if pos < len(body) and body[pos] == "@":
            pos += 1
        elif body[pos : pos + 2] in ("TH", "AL", "SP", "TB", "OH"):
            pos += 2
            while pos < len(body) and body[pos].isdigit():
                pos += 1

    hcount = 0
    if pos < len(body) and body[pos] == "H":
        pos += 1
        hcount = 1
        if pos < len(body) and body[pos].isdigit():
            hcount = int(body[pos])
            pos += 1

    charge = 0
    if pos < len(body) and body[pos] in "+-":
        sign = 1 if body[pos] == "+" else -1
        pos += 1
        if pos < len(body) and body[pos].isdigit():
            mag = ""
            while pos < len(body) and body[pos].isdigit():
                mag += body[pos]
                pos += 1
            charge = sign * int(mag)
        else:
            charge = sign
            while pos < len(body) and body[pos] == ("+" if sign > 0 else "-"):
                charge += sign
                pos += 1

    if pos < len(body) and body[pos] == ":":
        pos += 1
        if pos >= len(body) or not body[pos].isdigit():
            raise fail("atom class must be numeric")
        while pos < len(body) and body[pos].isdigit():
            pos += 1

    if pos != len(body):
        raise UnknownCharacter(f"unexpected {body[pos]!r} inside bracket atom", start + 1 + pos)

    kind = TokenKind.WILDCARD if number == 0 else TokenKind.ATOM
    return Token(
        kind,
        text,
        start,
        number=number,
        aromatic=aromatic,
        bracket=True,
        isotope=isotope,
        charge=charge,
        hcount=hcount,
    )


__all__ = ["Token", "TokenKind", "tokenize", "ORGANIC_SUBSET", "BOND_SYMBOLS"]
