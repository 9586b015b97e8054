"""The 17 molecular descriptors used as tabular features."""

from polymm.descriptors.atomic import hall_kier_alpha, mol_wt
from polymm.descriptors.counts import StructuralCounts, structural_counts
from polymm.descriptors.errors import (
    DescriptorError,
    IsolatedAtom,
    TableChecksumMismatch,
    TooSmall,
    UnclassifiedAtomType,
    UnclassifiedFragment,
)
from polymm.descriptors.logp import crippen_atom_types, mol_logp
from polymm.descriptors.surface import labute_asa, tpsa, tpsa_contributions
from polymm.descriptors.topology import balaban_j, chi_indices, distance_row_sums
from polymm.descriptors.vector import DESCRIPTOR_NAMES, INTEGER_FIELDS, DescriptorVector, compute_all

__all__ = [
    "DESCRIPTOR_NAMES",
    "INTEGER_FIELDS",
    "DescriptorError",
    "DescriptorVector",
    "IsolatedAtom",
    "StructuralCounts",
    "TableChecksumMismatch",
    "TooSmall",
    "UnclassifiedAtomType",
    "UnclassifiedFragment",
    "balaban_j",
    "chi_indices",
    "compute_all",
    "crippen_atom_types",
    "distance_row_sums",
    "hall_kier_alpha",
    "labute_asa",
    "mol_logp",
    "mol_wt",
    "structural_counts",
    "tpsa",
    "tpsa_contributions",
]
