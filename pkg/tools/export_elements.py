"""Regenerate src/polymm/chem/data/elements.tsv from an RDKit install.

Only needed when refreshing the shipped element table; the package itself
never imports RDKit.
"""

import sys

from rdkit import Chem

pt = Chem.GetPeriodicTable()
out = sys.stdout
out.write("# atomic_number\tsymbol\tatomic_weight\tbond_radius\tvalences\touter_electrons\n")
for z in range(0, 119):
    valences = ",".join(str(v) for v in pt.GetValenceList(z))
    out.write(
        f"{z}\t{pt.GetElementSymbol(z)}\t{pt.GetAtomicWeight(z)}\t{pt.GetRb0(z)}"
        f"\t{valences}\t{pt.GetNOuterElecs(z)}\n"
    )
