from __future__ import annotations

import math
import random

import pytest

from helpers import brute_balaban, brute_chi, corpus, read_reference
from polymm.canon import canonicalize, permute_graph
from polymm.chem import parse
from polymm.descriptors import (
    DESCRIPTOR_NAMES,
    INTEGER_FIELDS,
    IsolatedAtom,
    TooSmall,
    balaban_j,
    chi_indices,
    compute_all,
    hall_kier_alpha,
    labute_asa,
    mol_logp,
    mol_wt,
    structural_counts,
    tpsa,
)
from polymm.descriptors.tables import TABLE_FILES, table_digests

CORPUS = corpus()


class TestHandValues:
    def test_mol_wt(self):
        assert mol_wt(parse("C")) == pytest.approx(12.011 + 4 * 1.008, abs=1e-9)
        assert mol_wt(parse("O")) == pytest.approx(15.999 + 2 * 1.008, abs=1e-9)
        assert mol_wt(parse("*CC*")) == pytest.approx(28.054, abs=1e-9)

    def test_chi(self):
        assert chi_indices(parse("CC")) == pytest.approx((2.0, 1.0))
        chi0, chi1 = chi_indices(parse("CCC"))
        assert chi0 == pytest.approx(2 + 2**-0.5, abs=1e-12)
        assert chi1 == pytest.approx(2 * 2**-0.5, abs=1e-12)
        with pytest.raises(IsolatedAtom):
            chi_indices(parse("C"))

    def test_balaban(self):
        assert balaban_j(parse("CCCC")) == pytest.approx(3 * (2 / math.sqrt(24) + 1 / 4), abs=1e-12)
        assert balaban_j(parse("CC")) == pytest.approx(1.0, abs=1e-12)
        # frozen from the dense-matrix oracle: row sums 9, J = 6/2 * 6/9
        assert balaban_j(parse("c1ccccc1")) == pytest.approx(2.0, abs=1e-12)
        with pytest.raises(TooSmall):
            balaban_j(parse("C"))

    def test_tpsa(self):
        assert tpsa(parse("CCO")) == pytest.approx(20.23, abs=1e-9)
        assert tpsa(parse("CC")) == 0.0
        assert tpsa(parse("COC")) == pytest.approx(9.23, abs=1e-9)

    def test_logp(self):
        # two aliphatic CH3 contributions (C1 type, 0.1441 + 3 * 0.123 H)
        assert mol_logp(parse("CC")) == pytest.approx(1.0262, abs=1e-9)
        assert mol_logp(parse("c1ccccc1")) == pytest.approx(1.6866, abs=1e-9)

    def test_labute_monotone(self):
        assert labute_asa(parse("CC")) > labute_asa(parse("C")) > 0

    def test_hall_kier(self):
        assert hall_kier_alpha(parse("CC")) == 0.0
        assert hall_kier_alpha(parse("c1ccccc1")) == pytest.approx(-0.78, abs=1e-12)
        assert hall_kier_alpha(parse("O")) < 0

    def test_counts(self):
        c = structural_counts(parse("CCO"))
        assert (c.HeavyAtomCount, c.NOCount, c.NHOHCount, c.FractionCSP3) == (3, 1, 1, 1.0)
        c = structural_counts(parse("CC(=O)NC"))
        assert c.NumAmideBonds == 1 and c.NumRotatableBonds == 0
        assert structural_counts(parse("CCCC")).NumRotatableBonds == 1

    def test_compute_all_ethane(self):
        v = compute_all(parse("CC"))
        assert v.complete
        for name in INTEGER_FIELDS - {"HeavyAtomCount"}:
            assert v[name] == 0
        assert v["HeavyAtomCount"] == 2 and v["FractionCSP3"] == 1.0

    def test_compute_all_benzene(self):
        v = compute_all(parse("c1ccccc1"))
        assert (v["NumAromaticRings"], v["NumAliphaticRings"], v["FractionCSP3"]) == (1, 0, 0.0)

    def test_errors_poison_single_fields(self):
        v = compute_all(parse("C"))
        assert set(v.errors) == {"Chi0", "Chi1", "BalabanJ"}
        assert v["MolWt"] is not None and not v.complete

    def test_wildcards_are_massless(self):
        g = parse("*CC*")
        assert mol_wt(g) == pytest.approx(2 * (12.011 + 2 * 1.008), abs=1e-9)
        assert hall_kier_alpha(g) == 0.0
        assert tpsa(g) == 0.0
        assert structural_counts(g).HeavyAtomCount == structural_counts(parse("CC")).HeavyAtomCount


@pytest.mark.parametrize("smiles", CORPUS)
def test_vector_invariants(smiles):
    g = parse(smiles)
    v = compute_all(g)
    for name in INTEGER_FIELDS:
        assert isinstance(v[name], int) and v[name] >= 0
    assert 0.0 <= v["FractionCSP3"] <= 1.0
    assert v["MolWt"] > 0
    assert v["NumAromaticRings"] + v["NumAliphaticRings"] == len(g.rings)


@pytest.mark.parametrize("smiles", [s for s in CORPUS if len(parse(s).atoms) <= 14 and len(parse(s).atoms) > 1])
def test_topology_matches_brute_force(smiles):
    g = parse(smiles)
    chi0, chi1 = chi_indices(g)
    b0, b1 = brute_chi(g)
    assert abs(chi0 - b0) <= 1e-9 and abs(chi1 - b1) <= 1e-9
    assert abs(balaban_j(g) - brute_balaban(g)) <= 1e-9


@pytest.mark.parametrize("smiles", CORPUS[::4])
def test_permutation_and_canonical_invariance(smiles):
    g = parse(smiles)
    ref = compute_all(g)
    rng = random.Random(len(smiles))
    perm = list(range(len(g.atoms)))
    rng.shuffle(perm)
    for other in (compute_all(permute_graph(g, perm)), compute_all(parse(canonicalize(smiles)))):
        for name in DESCRIPTOR_NAMES:
            assert other[name] == pytest.approx(ref[name], abs=1e-9), name


def test_table_checksums():
    digests = table_digests()
    assert set(digests) == set(TABLE_FILES)


def test_additivity_of_mass():
    # joining two fragments by one bond removes exactly one H from each side
    whole = mol_wt(parse("CCOc1ccccc1"))
    parts = mol_wt(parse("CCO")) + mol_wt(parse("c1ccccc1"))
    assert whole == pytest.approx(parts - 2 * 1.008, abs=1e-9)


def test_matches_frozen_reference_values():
    for row in read_reference():
        v = compute_all(parse(row["smiles"]))
        for name, cell in row.items():
            if name == "smiles":
                continue
            ref = float(cell)
            if name in INTEGER_FIELDS or name == "FractionCSP3":
                assert v[name] == pytest.approx(ref, abs=1e-12), (row["smiles"], name)
            else:
                assert abs(v[name] - ref) <= 1e-2, (row["smiles"], name)


def test_matches_live_reference_toolkit():
    Chem = pytest.importorskip("rdkit.Chem")
    from rdkit.Chem import Descriptors

    for s in CORPUS[:60]:
        mol = Chem.MolFromSmiles(s)
        v = compute_all(parse(s))
        assert abs(v["MolWt"] - Descriptors.MolWt(mol)) <= 1e-2
        assert abs(v["TPSA"] - Descriptors.TPSA(mol)) <= 1e-2
        assert v["NumRotatableBonds"] == Descriptors.NumRotatableBonds(mol)
