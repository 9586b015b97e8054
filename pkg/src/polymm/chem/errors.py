"""Positioned parse and perception errors.

Every error carries a short machine code, an optional byte offset into the
input string and a message, and serializes as ``(code, offset, message)``.
"""

from __future__ import annotations


class ChemError(ValueError):
    code = "ChemError"

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.message = message
        self.position = position

    def to_tuple(self) -> tuple[str, int | None, str]:
        return (self.code, self.position, self.message)

    def __str__(self) -> str:
        if self.position is None:
            return f"{self.code}: {self.message}"
        return f"{self.code} at {self.position}: {self.message}"


class EmptyInput(ChemError):
    code = "EmptyInput"


class UnknownCharacter(ChemError):
    code = "UnknownCharacter"


class UnterminatedBracket(ChemError):
    code = "UnterminatedBracket"


class InvalidBracketAtom(ChemError):
    code = "InvalidBracketAtom"


class UnmatchedRingClosure(ChemError):
    code = "UnmatchedRingClosure"

    def __init__(self, digit: int, position: int | None = None):
        super().__init__(f"ring closure {digit} is never closed", position)
        self.digit = digit


class UnmatchedParenthesis(ChemError):
    code = "UnmatchedParenthesis"


class InvalidBond(ChemError):
    code = "InvalidBond"


class ValenceExceeded(ChemError):
    code = "ValenceExceeded"

    def __init__(self, atom_index: int, message: str, position: int | None = None):
        super().__init__(message, position)
        self.atom_index = atom_index


class DisconnectedInput(ChemError):
    code = "DisconnectedInput"


class KekulizationFailure(ChemError):
    code = "KekulizationFailure"
