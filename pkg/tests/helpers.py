"""Shared fixtures data and independent oracles for the test suite."""

from __future__ import annotations

import functools
import random
from pathlib import Path

import networkx as nx
from networkx.algorithms import isomorphism

from mtdd.chem import ChemError, Molecule, parse_smiles, read_smiles_file, write_smiles
from mtdd.qsar import BioassayDataset

DATA = Path(__file__).parent / "data"
CORPUS = DATA / "corpus.smi"


@functools.lru_cache(maxsize=None)
def corpus() -> tuple[tuple[str, Molecule], ...]:
    """Parseable corpus records as ``(input smiles, molecule)``."""
    out = []
    for smi, _ in read_smiles_file(CORPUS):
        try:
            out.append((smi, parse_smiles(smi)))
        except ChemError:
            continue
    return tuple(out)


@functools.lru_cache(maxsize=None)
def organic_corpus() -> tuple[tuple[str, Molecule], ...]:
    """Single-fragment corpus molecules restricted to the default element whitelist."""
    from mtdd.chem.normalize import passes_element_filter

    out = []
    for _, m in corpus():
        if len(m.fragments) == 1 and passes_element_filter(m) and m.heavy_atom_count >= 3:
            out.append((write_smiles(m), m))
    return tuple(out)


def to_graph(mol: Molecule) -> nx.Graph:
    g = nx.Graph()
    for i, a in enumerate(mol.atoms):
        g.add_node(i, label=(a.element, a.formal_charge, a.total_h, a.aromatic, a.isotope))
    for b in mol.bonds:
        g.add_edge(b.begin, b.end, order=int(b.order))
    return g


def isomorphic(a: Molecule, b: Molecule) -> bool:
    """Labelled graph isomorphism computed by networkx (independent of canonical ranks)."""
    if len(a.atoms) != len(b.atoms) or len(a.bonds) != len(b.bonds):
        return False
    return nx.is_isomorphic(
        to_graph(a),
        to_graph(b),
        node_match=isomorphism.categorical_node_match("label", None),
        edge_match=isomorphism.categorical_edge_match("order", None),
    )


def permuted(mol: Molecule, rng: random.Random) -> Molecule:
    order = list(range(len(mol.atoms)))
    rng.shuffle(order)
    return mol.renumbered(order)


def nitrogen_label(mol: Molecule) -> int:
    return int(any(a.element == "N" for a in mol.atoms))


def nitrogen_dataset(n: int, offset: int = 0) -> BioassayDataset:
    """Synthetic activity: label 1 iff the molecule contains nitrogen."""
    rows = [(smi, nitrogen_label(m)) for smi, m in organic_corpus()[offset : offset + n]]
    return BioassayDataset.from_smiles(rows, "synthetic nitrogen label")


def two_cluster_molecules() -> list[Molecule]:
    """Two families of close analogues plus unrelated singletons."""
    family_a = ["CCCCCCCCCCO", "CCCCCCCCCCCO", "CCCCCCCCCCCCO", "CCCCCCCCCCCCCO", "CCCCCCCCCCCCCCO", "CCCCCCCCCCCCCCCO"]
    family_b = [
        "c1ccc2ccccc2c1C(=O)N",
        "c1ccc2ccccc2c1C(=O)NC",
        "c1ccc2ccccc2c1C(=O)NCC",
        "c1ccc2ccccc2c1C(=O)NCCC",
        "c1ccc2ccccc2c1C(=O)N(C)C",
        "c1ccc2ccccc2c1C(=O)NCCCC",
        "c1ccc2ccccc2c1C(=O)NC(C)C",
    ]
    singletons = ["FC(F)(F)F", "N#N", "O=S(=O)(O)O", "ClCCl"]
    return [parse_smiles(s) for s in family_a + singletons + family_b]


def brute_lo_split(mols, threshold: float = 0.323, min_size: int = 5, max_size: int = 50):
    """Greedy lead clustering recomputed from pairwise Python Tanimoto values."""
    from mtdd.fingerprints import morgan_fingerprint, tanimoto

    fps = [morgan_fingerprint(m) for m in mols]
    n = len(fps)
    sim = [[tanimoto(fps[i], fps[j]) for j in range(n)] for i in range(n)]
    nbrs = [{j for j in range(n) if j != i and sim[i][j] > threshold} for i in range(n)]
    free = set(range(n))
    assignments = {}
    while free:
        lead = min(free, key=lambda i: (-len(nbrs[i] & free), i))
        if len(nbrs[lead] & free) < min_size - 1:
            break
        members = sorted(nbrs[lead] & free, key=lambda j: (-sim[lead][j], j))[: max_size - 1]
        free.discard(lead)
        for j in members:
            assignments[j] = lead
            free.discard(j)
    return assignments, sim
