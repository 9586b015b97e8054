from __future__ import annotations


class DescriptorError(ValueError):
    code = "DescriptorError"

    def __init__(self, message: str, atom_index: int | None = None):
        super().__init__(message)
        self.message = message
        self.atom_index = atom_index

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class IsolatedAtom(DescriptorError):
    code = "IsolatedAtom"


class TooSmall(DescriptorError):
    code = "TooSmall"


class UnclassifiedFragment(DescriptorError):
    code = "UnclassifiedFragment"


class UnclassifiedAtomType(DescriptorError):
    code = "UnclassifiedAtomType"


class TableChecksumMismatch(DescriptorError):
    code = "TableChecksumMismatch"
