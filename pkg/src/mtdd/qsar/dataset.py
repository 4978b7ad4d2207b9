"""Binary-labelled bioassay datasets."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from ..chem import ChemError, Molecule, parse_smiles, write_smiles


class EmptyDataset(ValueError):
    pass


class SingleClassDataset(ValueError):
    pass


@dataclass(frozen=True)
class BioassayDataset:
    molecules: tuple[Molecule, ...]
    labels: tuple[int, ...]
    provenance: str = ""

    def __post_init__(self):
        if len(self.molecules) != len(self.labels):
            raise ValueError("molecules and labels differ in length")
        if any(y not in (0, 1) for y in self.labels):
            raise ValueError("labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def records(self) -> list[tuple[Molecule, int]]:
        return list(zip(self.molecules, self.labels))

    def subset(self, indices: Sequence[int]) -> BioassayDataset:
        return BioassayDataset(
            tuple(self.molecules[i] for i in indices),
            tuple(self.labels[i] for i in indices),
            self.provenance,
        )

    def require_trainable(self) -> None:
        if not self.labels:
            raise EmptyDataset("dataset has no records")
        if len(self.labels) < 2 or len(set(self.labels)) < 2:
            raise SingleClassDataset("training needs both classes present")

    @classmethod
    def from_records(
        cls, records: Iterable[tuple[Molecule, int]], provenance: str = ""
    ) -> BioassayDataset:
        """Build a dataset, merging duplicate structures.

        Duplicates (same canonical SMILES) keep the first-seen molecule and
        take the majority label; ties go to active.
        """
        order: list[str] = []
        first: dict[str, Molecule] = {}
        votes: dict[str, list[int]] = {}
        for mol, label in records:
            key = write_smiles(mol)
            if key not in first:
                order.append(key)
                first[key] = mol
                votes[key] = [0, 0]
            votes[key][int(label)] += 1
        labels = tuple(1 if votes[k][1] >= votes[k][0] else 0 for k in order)
        return cls(tuple(first[k] for k in order), labels, provenance)

    @classmethod
    def from_smiles(
        cls, rows: Iterable[tuple[str, int]], provenance: str = "", skip_invalid: bool = True
    ) -> BioassayDataset:
        recs = []
        for smi, label in rows:
            try:
                recs.append((parse_smiles(smi), int(label)))
            except ChemError:
                if not skip_invalid:
                    raise
        return cls.from_records(recs, provenance)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["smiles", "activity"])
            for mol, y in zip(self.molecules, self.labels):
                w.writerow([write_smiles(mol), y])


def read_bioassay_csv(path: str | Path, provenance: str | None = None) -> BioassayDataset:
    """Read a ``smiles,activity`` CSV; unparseable rows are skipped."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"smiles", "activity"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'smiles,activity'")
        rows = [(r["smiles"], int(r["activity"])) for r in reader]
    return BioassayDataset.from_smiles(rows, provenance if provenance is not None else str(path))
