"""Library-preparation chemistry: salt stripping, charge neutralization, element filter."""

from __future__ import annotations

from collections.abc import Collection
from dataclasses import replace

from .elements import DEFAULT_WHITELIST
from .errors import ChemError
from .mol import Atom, Molecule, build_molecule
from .smiles import write_smiles


def strip_salts(mol: Molecule) -> Molecule:
    """Keep the largest fragment.

    Ranked by heavy-atom count, then molecular weight, then the
    lexicographically smallest canonical SMILES.
    """
    frags = mol.fragments
    if len(frags) <= 1:
        return mol
    pieces = [mol.subgraph(f) for f in frags]
    best = min(
        pieces,
        key=lambda m: (-m.heavy_atom_count, -round(m.molecular_weight, 6), write_smiles(m)),
    )
    return best


def _neutralized_atom(mol: Molecule, idx: int) -> Atom | None:
    a = mol.atoms[idx]
    if a.formal_charge < 0 and a.element in ("O", "S", "N"):
        if any(mol.atoms[n].formal_charge > 0 for n in mol.neighbors(idx)):
            return None
        return replace(
            a, formal_charge=a.formal_charge + 1, explicit_h=a.total_h + 1, implicit_h=0, bracket=True
        )
    if a.formal_charge > 0 and a.element in ("N", "O") and a.total_h > 0:
        return replace(
            a, formal_charge=a.formal_charge - 1, explicit_h=a.total_h - 1, implicit_h=0, bracket=True
        )
    return None


def neutralize_charges(mol: Molecule) -> Molecule:
    """Neutralize ionized acids and protonated bases.

    Anionic O/S/N without a positively charged neighbor gain a hydrogen;
    cationic N/O carrying hydrogens lose one. Quaternary centers, nitro-style
    charge pairs and anything else are left untouched. Changes that would
    break valence rules are skipped.
    """
    current = mol
    # neutralizing one atom can unblock a neighbor; bounded fixpoint
    for _ in range(len(mol.atoms) + 1):
        nxt = _neutralize_once(current)
        if nxt is current:
            break
        current = nxt
    return current


def _neutralize_once(mol: Molecule) -> Molecule:
    changes = {}
    for i in range(len(mol.atoms)):
        new = _neutralized_atom(mol, i)
        if new is not None:
            changes[i] = new
    if not changes:
        return mol

    def rebuild(subset):
        atoms = [subset.get(i, a) for i, a in enumerate(mol.atoms)]
        return build_molecule(atoms, mol.bonds, mol.stereo_count)

    try:
        out = rebuild(changes)
    except ChemError:
        accepted: dict[int, Atom] = {}
        out = mol
        for i, atom in changes.items():
            trial = dict(accepted)
            trial[i] = atom
            try:
                out = rebuild(trial)
            except ChemError:
                continue
            accepted = trial
    return out


def passes_element_filter(mol: Molecule, whitelist: Collection[str] = DEFAULT_WHITELIST) -> bool:
    return mol.elements() <= set(whitelist)
