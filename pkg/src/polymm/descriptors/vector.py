"""The 17-field descriptor vector and its per-field error handling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from polymm.chem import MolecularGraph
from polymm.descriptors.atomic import hall_kier_alpha, mol_wt
from polymm.descriptors.counts import structural_counts
from polymm.descriptors.errors import DescriptorError
from polymm.descriptors.logp import mol_logp
from polymm.descriptors.surface import labute_asa, tpsa
from polymm.descriptors.topology import balaban_j, chi_indices

DESCRIPTOR_NAMES: tuple[str, ...] = (
    "MolWt",
    "MolLogP",
    "BalabanJ",
    "Chi0",
    "Chi1",
    "HallKierAlpha",
    "LabuteASA",
    "TPSA",
    "FractionCSP3",
    "HeavyAtomCount",
    "NHOHCount",
    "NOCount",
    "NumAliphaticRings",
    "NumAmideBonds",
    "NumAromaticRings",
    "NumRotatableBonds",
    "NumSaturatedRings",
)

INTEGER_FIELDS = frozenset(
    {
        "HeavyAtomCount",
        "NHOHCount",
        "NOCount",
        "NumAliphaticRings",
        "NumAmideBonds",
        "NumAromaticRings",
        "NumRotatableBonds",
        "NumSaturatedRings",
    }
)


@dataclass(frozen=True)
class DescriptorVector:
    """Named descriptor values; a field is ``None`` when its computation failed.

    ``errors`` maps each failed field to ``"<code>: <message>"``.
    """

    values: dict[str, float | int | None]
    errors: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float | int | None:
        return self.values[name]

    @property
    def complete(self) -> bool:
        return not self.errors

    def as_row(self) -> list[float | int | None]:
        return [self.values[name] for name in DESCRIPTOR_NAMES]

    def format_value(self, name: str) -> str:
        """Stable text form used in CSV files and prompts."""
        v = self.values[name]
        if v is None:
            return ""
        if name in INTEGER_FIELDS:
            return str(int(v))
        return f"{v:.4f}"


def compute_all(graph: MolecularGraph) -> DescriptorVector:
    """All 17 descriptors; a failing descriptor leaves the others intact."""
    values: dict[str, float | int | None] = {}
    errors: dict[str, str] = {}

    def attempt(names: tuple[str, ...], fn) -> None:
        try:
            result = fn()
        except DescriptorError as exc:
            for name in names:
                values[name] = None
                errors[name] = str(exc)
            return
        if len(names) == 1:
            result = (result,)
        for name, v in zip(names, result):
            if isinstance(v, float) and not math.isfinite(v):
                values[name] = None
                errors[name] = f"NonFinite: {v!r}"
            else:
                values[name] = v
        return

    attempt(("MolWt",), lambda: mol_wt(graph))
    attempt(("MolLogP",), lambda: mol_logp(graph))
    attempt(("BalabanJ",), lambda: balaban_j(graph))
    attempt(("Chi0", "Chi1"), lambda: chi_indices(graph))
    attempt(("HallKierAlpha",), lambda: hall_kier_alpha(graph))
    attempt(("LabuteASA",), lambda: labute_asa(graph))
    attempt(("TPSA",), lambda: tpsa(graph))
    counts = structural_counts(graph)
    for name in DESCRIPTOR_NAMES:
        if hasattr(counts, name):
            values[name] = getattr(counts, name)
    return DescriptorVector({name: values[name] for name in DESCRIPTOR_NAMES}, errors)
