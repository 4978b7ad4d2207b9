"""Physicochemical profile: MW, Crippen logP, logD estimate, TPSA, HBD/HBA, basic pKa."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

from ..chem.mol import Molecule
from .patterns import ContributionTable, compile_pattern

DATA_DIR = Path(__file__).parent / "data"
PHYSIOLOGICAL_PH = 7.4


@dataclass(frozen=True)
class PhyschemProfile:
    mw: float
    clogp: float
    clogd: float
    tpsa: float
    hbd: int
    hba: int
    pka_basic: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=None)
def load_table(name: str) -> ContributionTable:
    return ContributionTable.load(DATA_DIR / f"{name}.tsv")


def crippen_logp(mol: Molecule) -> float:
    heavy, hyd = load_table("crippen_heavy"), load_table("crippen_hydrogen")
    total = 0.0
    for i, atom in enumerate(mol.atoms):
        hit = heavy.classify(mol, i)
        if hit is not None:
            total += hit[1]
        if atom.total_h:
            h_hit = hyd.classify(mol, i)
            if h_hit is not None:
                total += atom.total_h * h_hit[1]
    return total


def tpsa(mol: Molecule) -> float:
    table = load_table("tpsa")
    total = 0.0
    for i, atom in enumerate(mol.atoms):
        if atom.element not in ("N", "O"):
            continue
        hit = table.classify(mol, i)
        if hit is not None:
            total += hit[1]
            continue
        deg, h = mol.degree(i), atom.total_h
        if atom.element == "N":
            total += max(0.0, 30.5 - 8.2 * deg + 1.5 * h)
        else:
            total += max(0.0, 28.5 - 8.6 * deg + 1.5 * h)
    return total


_PYRROLE_NH = compile_pattern("el=n;h=1+")
_AMIDE_N = compile_pattern("el=N;nb-C{nb=O>=1}>=1")


def hbd(mol: Molecule) -> int:
    return sum(1 for a in mol.atoms if a.element in ("N", "O") and a.total_h > 0)


def hba(mol: Molecule) -> int:
    count = 0
    for i, a in enumerate(mol.atoms):
        if a.element == "O":
            count += 1
        elif a.element == "N" and not (_PYRROLE_NH(mol, i) or _AMIDE_N(mol, i)):
            count += 1
    return count


def pka_basic(mol: Molecule) -> float | None:
    """Largest lookup pKa over all basic-center matches, or None."""
    table = load_table("pka")
    best = None
    for i in range(len(mol.atoms)):
        for _, value in table.matches(mol, i):
            if best is None or value > best:
                best = value
    return best


def clogd(clogp: float, pka: float | None) -> float:
    if pka is None:
        return clogp
    return clogp - max(0.0, pka - PHYSIOLOGICAL_PH)


def compute_profile(mol: Molecule) -> PhyschemProfile:
    logp = crippen_logp(mol)
    pka = pka_basic(mol)
    return PhyschemProfile(
        mw=mol.molecular_weight,
        clogp=logp,
        clogd=clogd(logp, pka),
        tpsa=tpsa(mol),
        hbd=hbd(mol),
        hba=hba(mol),
        pka_basic=pka,
    )
