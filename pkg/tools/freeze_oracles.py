"""Freeze the acceptance corpora and the reference-toolkit descriptor values.

Writes, relative to the repository root:

* tests/data/canon100.smi: the first 100 molecules of tests/data/corpus.smi
* tests/data/descriptors50.csv: 50 polymer repeat units with RDKit values for
  every descriptor that has a toolkit counterpart

Run with RDKit installed; the package itself never imports it.
"""

from __future__ import annotations

import csv
from pathlib import Path

import rdkit
from rdkit import Chem, RDLogger
from rdkit.Chem import Descriptors, rdMolDescriptors

RDLogger.DisableLog("rdApp.*")

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "tests" / "data"

REFERENCE = {
    "MolWt": Descriptors.MolWt,
    "MolLogP": Descriptors.MolLogP,
    "HallKierAlpha": Descriptors.HallKierAlpha,
    "LabuteASA": Descriptors.LabuteASA,
    "TPSA": Descriptors.TPSA,
    "FractionCSP3": Descriptors.FractionCSP3,
    "HeavyAtomCount": Descriptors.HeavyAtomCount,
    "NHOHCount": Descriptors.NHOHCount,
    "NOCount": Descriptors.NOCount,
    "NumAliphaticRings": Descriptors.NumAliphaticRings,
    "NumAmideBonds": rdMolDescriptors.CalcNumAmideBonds,
    "NumAromaticRings": Descriptors.NumAromaticRings,
    "NumRotatableBonds": Descriptors.NumRotatableBonds,
    "NumSaturatedRings": Descriptors.NumSaturatedRings,
}


def main() -> None:
    corpus = [line.split()[0] for line in (DATA / "corpus.smi").read_text().splitlines() if line.strip()]
    (DATA / "canon100.smi").write_text("\n".join(corpus[:100]) + "\n")
    polymers = [s for s in corpus if s.count("*") == 2][:50]
    with open(DATA / "descriptors50.csv", "w", newline="") as fh:
        fh.write(f"# reference: RDKit {rdkit.__version__}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["smiles", *REFERENCE])
        for s in polymers:
            mol = Chem.MolFromSmiles(s)
            w.writerow([s, *(repr(fn(mol)) for fn in REFERENCE.values())])


if __name__ == "__main__":
    main()
