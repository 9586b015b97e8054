"""P-SMILES tokenizer, parser and ring/aromaticity perception."""

from polymm.chem.errors import (
    ChemError,
    DisconnectedInput,
    EmptyInput,
    InvalidBond,
    InvalidBracketAtom,
    KekulizationFailure,
    UnknownCharacter,
    UnmatchedParenthesis,
    UnmatchedRingClosure,
    UnterminatedBracket,
    ValenceExceeded,
)
from polymm.chem.graph import Atom, Bond, BondOrder, MolecularGraph
from polymm.chem.parser import parse
from polymm.chem.rings import find_sssr
from polymm.chem.tokenizer import Token, TokenKind, tokenize

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "ChemError",
    "DisconnectedInput",
    "EmptyInput",
    "InvalidBond",
    "InvalidBracketAtom",
    "KekulizationFailure",
    "MolecularGraph",
    "Token",
    "TokenKind",
    "UnknownCharacter",
    "UnmatchedParenthesis",
    "UnmatchedRingClosure",
    "UnterminatedBracket",
    "ValenceExceeded",
    "find_sssr",
    "parse",
    "tokenize",
]
