"""Regenerate src/polymm/descriptors/data/crippen.tsv from an RDKit install.

The table compiled into the descriptor library is used rather than
Data/Crippen.txt: the two differ in the H2 rows (element-number queries in
the compiled copy), and the compiled one is what the descriptor functions
actually evaluate.  Row order is kept since typing is first-match.
"""

import glob
import os
import re
import sys

import rdkit

libdir = os.path.join(os.path.dirname(os.path.dirname(rdkit.__file__)), "rdkit.libs")
lib = glob.glob(os.path.join(libdir, "libRDKitDescriptors*"))[0]
blob = open(lib, "rb").read()
start = blob.index(b"C1\t[CH4]")
end = blob.index(b"\x00", start)
text = blob[start:end].decode("ascii")

out = sys.stdout
out.write("# Wildman-Crippen atom types (logP contributions); first matching row wins\n")
out.write("# type\tsmarts\tlogp\n")
for line in text.splitlines():
    parts = line.split("\t")
    if len(parts) < 3 or not re.match(r"^[A-Za-z]+\d*$", parts[0]):
        continue
    out.write(f"{parts[0]}\t{parts[1]}\t{parts[2]}\n")
