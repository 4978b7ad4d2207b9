from .elements import DEFAULT_WHITELIST
from .errors import (
    ChemError,
    KekulizationFailure,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnclosedRingBond,
    UnknownElement,
    ValenceViolation,
)
from .mol import Atom, Bond, BondOrder, Molecule, build_molecule
from .smiles import canonical_smiles, parse_smiles, read_smiles_file, write_smiles

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "ChemError",
    "DEFAULT_WHITELIST",
    "KekulizationFailure",
    "Molecule",
    "SmilesSyntaxError",
    "UnbalancedParenthesis",
    "UnclosedRingBond",
    "UnknownElement",
    "ValenceViolation",
    "build_molecule",
    "canonical_smiles",
    "parse_smiles",
    "read_smiles_file",
    "write_smiles",
]
