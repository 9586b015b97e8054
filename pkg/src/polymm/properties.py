"""The five target properties, their units and answer formatting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

PROPERTIES: tuple[str, ...] = ("Tg", "FFV", "Tc", "Density", "Rg")


@dataclass(frozen=True)
class PropertyFormat:
    """How one property is written in prompts and answers.

    ``unit`` is the canonical answer unit (empty for unitless values);
    ``prompt_unit`` is the wording used inside prompts; ``aliases`` are
    additional unit spellings accepted when parsing answers.
    """

    name: str
    unit: str
    precision: int
    prompt_unit: str = ""
    aliases: tuple[str, ...] = field(default_factory=tuple)

    @property
    def prompt_text(self) -> str:
        return self.prompt_unit or self.unit

    def accepts(self, unit: str) -> bool:
        return unit == self.unit or unit in self.aliases

    def answer(self, value: float) -> str:
        """``<name>:<value> <unit>``, or ``<name>:<value>`` when unitless.

        >>> DEFAULT_FORMATS["Density"].answer(0.9431)
        'Density:0.9431 g/cm^3'
        """
        text = f"{self.name}:{value:.{self.precision}f}"
        return f"{text} {self.unit}" if self.unit else text


DEFAULT_FORMATS: dict[str, PropertyFormat] = {
    "Tg": PropertyFormat("Tg", "°C", 1, aliases=("C", "degC")),
    "FFV": PropertyFormat("FFV", "", 4, prompt_unit="unitless", aliases=("unitless",)),
    "Tc": PropertyFormat("Tc", "W/(m·K)", 4, aliases=("W/(m*K)", "W/mK")),
    "Density": PropertyFormat("Density", "g/cm^3", 4, aliases=("g/cm3", "g/cm³")),
    "Rg": PropertyFormat("Rg", "Å", 2, aliases=("A", "Angstrom")),
}


def formats_with_units(units: Mapping[str, str] | None = None) -> dict[str, PropertyFormat]:
    """Default formats with the answer unit of some properties replaced."""
    out = dict(DEFAULT_FORMATS)
    for prop, unit in (units or {}).items():
        if prop not in out:
            raise KeyError(f"unknown property {prop!r}")
        base = out[prop]
        out[prop] = PropertyFormat(base.name, unit, base.precision, base.prompt_unit if not unit else "", base.aliases)
    return out
