"""Element table shared by the parser, perception code and descriptors.

The data lives in ``data/elements.tsv`` (atomic weight, bond radius, allowed
valences and outer-shell electron count per atomic number).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


@dataclass(frozen=True)
class Element:
    number: int
    symbol: str
    weight: float
    bond_radius: float
    valences: tuple[int, ...]
    outer_electrons: int

    @property
    def default_valence(self) -> int:
        return self.valences[0]


ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_SYMBOLS = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S", "se": "Se", "as": "As", "te": "Te"}

# valences used to fill implicit hydrogens on unbracketed atoms
ORGANIC_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

HYDROGEN_WEIGHT = 1.008


@lru_cache(maxsize=1)
def _load() -> tuple[dict[int, Element], dict[str, Element]]:
    text = resources.files("polymm.chem").joinpath("data/elements.tsv").read_text(encoding="utf-8")
    by_number: dict[int, Element] = {}
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        z, sym, weight, radius, valences, outer = line.split("\t")
        by_number[int(z)] = Element(
            number=int(z),
            symbol=sym,
            weight=float(weight),
            bond_radius=float(radius),
            valences=tuple(int(v) for v in valences.split(",")),
            outer_electrons=int(outer),
        )
    by_symbol = {e.symbol: e for e in by_number.values()}
    return by_number, by_symbol


def element(key: int | str) -> Element:
    """Look up an element by atomic number or symbol.

    Raises:
        KeyError: unknown element.
    """
    by_number, by_symbol = _load()
    if isinstance(key, int):
        return by_number[key]
    return by_symbol[key]


def is_element_symbol(symbol: str) -> bool:
    return symbol in _load()[1]


def charged_valences(number: int, charge: int) -> tuple[int, ...] | None:
    """Allowed valences for an atom carrying ``charge``.

    Charged atoms take the valences of their isoelectronic neighbour in the
    periodic table (N+ like C, O- like F, C- like N).  ``None`` means the
    valence is unconstrained (metals, the wildcard).
    """
    el = element(number)
    if number == 0 or -1 in el.valences:
        return None
    if charge == 0:
        return el.valences
    shifted = number - charge
    if shifted < 1 or shifted > 118:
        return None
    vals = element(shifted).valences
    return None if -1 in vals else vals
