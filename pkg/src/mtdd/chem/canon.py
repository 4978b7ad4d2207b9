"""Canonical atom ranking by iterative neighborhood refinement."""

from __future__ import annotations

from .elements import ATOMIC_NUMBER
from .mol import Molecule


def atom_invariant(mol: Molecule, idx: int) -> tuple:
    a = mol.atoms[idx]
    return (
        mol.degree(idx),
        ATOMIC_NUMBER[a.element],
        a.isotope or 0,
        a.formal_charge,
        a.total_h,
        a.aromatic,
        a.in_ring,
    )


def _dense_rank(keys: list) -> list[int]:
    order = sorted(set(keys))
    lookup = {k: r for r, k in enumerate(order)}
    return [lookup[k] for k in keys]


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    n = len(ranks)
    nbrs = _neighbor_table(mol)
    # (bond order, rank) packed into one int; order-preserving since rank < n
    base = n + 1
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted([o * base + ranks[j] for o, j in nbrs[i]])))
            for i in range(n)
        ]
        new = _dense_rank(keys)
        n_new = len(set(new))
        ranks = new
        if n_new == n_classes:
            return ranks
        n_classes = n_new


def _neighbor_table(mol: Molecule) -> tuple:
    cached = mol.__dict__.get("_canon_nbrs")
    if cached is None:
        bonds = mol.bonds
        cached = mol.__dict__["_canon_nbrs"] = tuple(
            tuple((int(bonds[bi].order), j) for j, bi in adj) for adj in mol.adjacency
        )
    return cached


def canonical_ranks(mol: Molecule) -> list[int]:
    """Unique rank per atom, invariant under input atom order up to symmetry.

    Ties surviving refinement are broken by promoting the lowest-index atom of
    the lowest tied class and refining again.
    """
    n = len(mol.atoms)
    if n == 0:
        return []
    ranks = _refine(mol, _dense_rank([atom_invariant(mol, i) for i in range(n)]))
    while len(set(ranks)) < n:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        chosen = min(i for i in range(n) if ranks[i] == tied)
        ranks = [2 * r + (0 if i == chosen or r != tied else 1) for i, r in enumerate(ranks)]
        ranks = _refine(mol, _dense_rank(ranks))
    return ranks
