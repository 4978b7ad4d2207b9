"""Regenerate tests/data/corpus.smi from public SMILES sets bundled with RDKit.

Sources: NCI open database (first 5K records, public domain) and ChEMBL
example sets shipped in RDKit's Contrib directory. Each record is rewritten
as RDKit canonical aromatic SMILES so the corpus exercises aromatic input.
"""

import os
import sys

import rdkit
from rdkit import Chem, RDLogger

RDLogger.DisableLog("rdApp.*")
root = os.path.dirname(rdkit.__file__)
sources = [
    ("Data/NCI/first_5K.smi", "nci"),
    ("Contrib/FreeWilson/data/CHEMBL2321810.smi", "chembl"),
    ("Contrib/fraggle/data/ChEMBL_11265_actives.smi", "chembl"),
    ("Contrib/Fastcluster/cdk2.smi", "cdk2"),
    ("Contrib/mmpa/data/sample.smi", "mmpa"),
]
out = sys.argv[1] if len(sys.argv) > 1 else "tests/data/corpus.smi"
seen = set()
n = 0
with open(out, "w") as fh:
    fh.write("# canonical aromatic SMILES regenerated by tools/build_corpus.py\n")
    for rel, tag in sources:
        for k, line in enumerate(open(os.path.join(root, rel))):
            parts = line.split()
            if not parts or parts[0].lower() == "smiles":
                continue
            mol = Chem.MolFromSmiles(parts[0])
            if mol is None:
                continue
            smi = Chem.MolToSmiles(mol)
            if smi in seen:
                continue
            seen.add(smi)
            n += 1
            fh.write(f"{smi}\t{tag}-{k}\n")
print(n, "records")
