"""Compound-library preparation, lead-optimization (Lo) splits and dataset download."""

from __future__ import annotations

import hashlib
import json
import logging
import urllib.error
import urllib.request
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chem import ChemError, Molecule, parse_smiles, write_smiles
from .chem.elements import DEFAULT_WHITELIST
from .chem.normalize import neutralize_charges, passes_element_filter, strip_salts
from .fingerprints import (
    DEFAULT_CONFIG,
    Fingerprint,
    FingerprintConfig,
    SimilarityIndex,
    fingerprint_matrix,
    fingerprints,
)
from .qsar.dataset import BioassayDataset

log = logging.getLogger(__name__)

SIMILARITY_CUTOFF = 0.323
MAX_SMILES_LENGTH = 100
REJECTION_CATEGORIES = ("parse", "salt", "length", "element", "similarity", "duplicate")


class AllRecordsRejected(ValueError):
    pass


class NoClusterFound(ValueError):
    pass


class NetworkFailure(OSError):
    pass


class MalformedPayload(ValueError):
    pass


# ---------------------------------------------------------------------------
# library preparation


@dataclass(frozen=True)
class LibraryEntry:
    id: str
    smiles: str
    fingerprint: Fingerprint
    original_length: int


@dataclass(frozen=True)
class Rejection:
    index: int
    id: str
    category: str
    reason: str


@dataclass
class RejectionReport:
    n_input: int
    n_output: int
    rejections: list[Rejection] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(r.category for r in self.rejections)
        return {k: c.get(k, 0) for k in REJECTION_CATEGORIES}

    def to_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_output": self.n_output,
            "counts": self.counts,
            "rejections": [r.__dict__ for r in self.rejections],
        }


@dataclass
class CompoundLibrary:
    entries: list[LibraryEntry]
    source: str = ""
    report: RejectionReport | None = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def smiles(self) -> list[str]:
        return [e.smiles for e in self.entries]

    def molecules(self) -> list[Molecule]:
        return [parse_smiles(e.smiles) for e in self.entries]

    def save(self, path: str | Path) -> None:
        """Tab-separated ``smiles  id`` lines in library order."""
        with open(path, "w") as fh:
            for e in self.entries:
                fh.write(f"{e.smiles}\t{e.id}\n")


def _records(raw: Iterable) -> list[tuple[str, str]]:
    out = []
    for i, item in enumerate(raw):
        if isinstance(item, str):
            out.append((item, str(i)))
        else:
            smi, rid = item
            out.append((smi, str(i) if rid is None else str(rid)))
    return out


def preprocess_library(
    raw: Iterable,
    reference_mols: Sequence[Molecule] = (),
    cfg: FingerprintConfig = DEFAULT_CONFIG,
    similarity_cutoff: float = SIMILARITY_CUTOFF,
    max_length: int = MAX_SMILES_LENGTH,
    whitelist: Iterable[str] = DEFAULT_WHITELIST,
    source: str = "",
) -> CompoundLibrary:
    """Clean a raw SMILES list into a deduplicated compound library.

    ``raw`` holds SMILES strings or ``(smiles, id)`` pairs. Steps, in order:
    parse, keep the largest fragment, neutralize, drop inputs longer than
    ``max_length`` characters, drop disallowed elements, drop molecules more
    similar than ``similarity_cutoff`` to any reference, drop repeated
    canonical SMILES. The first occurrence wins and input order is kept.
    """
    records = _records(raw)
    if not records:
        raise ValueError("no input records")
    whitelist = frozenset(whitelist)
    index = SimilarityIndex(fingerprints(list(reference_mols), cfg)) if reference_mols else None
    report = RejectionReport(len(records), 0)
    seen: set[str] = set()

    def reject(i, rid, cat, reason):
        report.rejections.append(Rejection(i, rid, cat, reason))
        log.debug("record %s rejected (%s): %s", rid, cat, reason)

    pending = []
    for i, (smi, rid) in enumerate(records):
        try:
            mol = parse_smiles(smi)
        except ChemError as exc:
            reject(i, rid, "parse", str(exc))
            continue
        try:
            mol = neutralize_charges(strip_salts(mol))
        except ChemError as exc:
            reject(i, rid, "salt", str(exc))
            continue
        if mol.heavy_atom_count == 0:
            reject(i, rid, "salt", "no heavy atoms left after salt stripping")
            continue
        if len(smi) > max_length:
            reject(i, rid, "length", f"SMILES has {len(smi)} characters (limit {max_length})")
            continue
        if not passes_element_filter(mol, whitelist):
            bad = sorted(mol.elements() - whitelist)
            reject(i, rid, "element", "disallowed elements: " + ",".join(bad))
            continue
        pending.append((i, rid, smi, mol))

    fps = fingerprints([p[3] for p in pending], cfg) if pending else []
    entries = []
    for (i, rid, smi, mol), fp in zip(pending, fps):
        if index is not None:
            sim = index.max_similarity(fp)
            if sim > similarity_cutoff:
                reject(i, rid, "similarity", f"max similarity {sim:.4f} to references")
                continue
        can = write_smiles(mol)
        if can in seen:
            reject(i, rid, "duplicate", f"duplicate of {can}")
            continue
        seen.add(can)
        entries.append(LibraryEntry(rid, can, fp, len(smi)))

    report.rejections.sort(key=lambda r: r.index)
    report.n_output = len(entries)
    if not entries:
        raise AllRecordsRejected(f"all {len(records)} records rejected: {report.counts}")
    return CompoundLibrary(entries, source, report)


# ---------------------------------------------------------------------------
# Lo split


@dataclass(frozen=True)
class LoSplitConfig:
    similarity_threshold: float = SIMILARITY_CUTOFF
    min_cluster_size: int = 5
    max_cluster_size: int = 50

    def __post_init__(self):
        if not 0 < self.similarity_threshold < 1:
            raise ValueError("similarity_threshold must lie in (0, 1)")
        if not 1 <= self.min_cluster_size <= self.max_cluster_size:
            raise ValueError("need 1 <= min_cluster_size <= max_cluster_size")


@dataclass(frozen=True)
class LoSplit:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    cluster_assignments: dict[int, int]

    @property
    def leads(self) -> list[int]:
        return sorted(set(self.cluster_assignments.values()))

    def to_dict(self) -> dict:
        return {
            "train_indices": list(self.train_indices),
            "test_indices": list(self.test_indices),
            "cluster_assignments": {str(k): v for k, v in sorted(self.cluster_assignments.items())},
        }


def similarity_matrix(X: np.ndarray) -> np.ndarray:
    """Dense Tanimoto matrix for a 0/1 fingerprint matrix."""
    # float32 products of 0/1 rows are exact integers below 2**24
    Xf = X.astype(np.float32)
    inter = (Xf @ Xf.T).astype(np.int64)
    pop = X.astype(np.int64).sum(axis=1)
    union = pop[:, None] + pop[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(union == 0, 1.0, inter / np.maximum(union, 1))
    return sim


def lo_split(
    dataset: BioassayDataset | Sequence[Molecule],
    cfg: LoSplitConfig = LoSplitConfig(),
    seed: int = 0,
    fp_cfg: FingerprintConfig = DEFAULT_CONFIG,
) -> LoSplit:
    """Greedy lead clustering.

    Repeatedly take the unassigned molecule with the most unassigned
    neighbours (similarity above the threshold; ties to the lower index). If
    it has at least ``min_cluster_size - 1`` of them it becomes a training
    lead and its ``max_cluster_size - 1`` most similar neighbours go to test.
    The procedure is deterministic; ``seed`` is accepted for interface
    symmetry and does not change the result.
    """
    mols = list(dataset.molecules) if isinstance(dataset, BioassayDataset) else list(dataset)
    n = len(mols)
    if n < cfg.min_cluster_size:
        raise NoClusterFound(f"{n} molecules cannot form a cluster of {cfg.min_cluster_size}")
    sim = similarity_matrix(fingerprint_matrix(mols, fp_cfg))
    adj = sim > cfg.similarity_threshold
    np.fill_diagonal(adj, False)
    free = np.ones(n, dtype=bool)
    need = cfg.min_cluster_size - 1
    assignments: dict[int, int] = {}
    train: list[int] = []
    while free.any():
        counts = adj[:, free].sum(axis=1)
        counts[~free] = -1
        lead = int(np.argmax(counts))
        if counts[lead] < need:
            break
        nbrs = np.flatnonzero(adj[lead] & free)
        order = sorted(nbrs.tolist(), key=lambda j: (-sim[lead, j], j))
        members = order[: cfg.max_cluster_size - 1]
        train.append(lead)
        free[lead] = False
        for j in members:
            assignments[j] = lead
            free[j] = False
    if not assignments:
        raise NoClusterFound("no molecule has enough similar neighbours to seed a cluster")
    train.extend(np.flatnonzero(free).tolist())
    return LoSplit(tuple(sorted(train)), tuple(sorted(assignments)), assignments)


# ---------------------------------------------------------------------------
# remote datasets


def cache_path(url: str, cache_dir: str | Path) -> Path:
    return Path(cache_dir) / (hashlib.sha256(url.encode()).hexdigest() + ".txt")


def parse_payload(text: str) -> list[tuple[str, int]]:
    """Parse ``smiles<delim>label`` rows (comma or tab); an optional header is skipped."""
    rows = []
    seen_header = False
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        delim = "\t" if "\t" in line else ","
        if delim not in line:
            raise MalformedPayload(f"line {lineno}: no delimiter in {line!r}")
        smi, _, label = line.partition(delim)
        label = label.split(delim)[0].strip()
        if label not in ("0", "1"):
            if not rows and not seen_header:
                seen_header = True
                continue
            raise MalformedPayload(f"line {lineno}: label {label!r} is not 0 or 1")
        rows.append((smi.strip(), int(label)))
    return rows


def fetch_remote_dataset(
    url: str, cache_dir: str | Path, offline: bool = False, timeout: float = 30.0
) -> list[tuple[str, int]]:
    """Download (or read from cache) a delimited ``smiles,label`` payload.

    Cache layout: ``<cache_dir>/<sha256(url)>.txt`` holding the raw payload,
    plus ``<sha256(url)>.json`` with the source URL.
    """
    path = cache_path(url, cache_dir)
    if path.exists():
        return parse_payload(path.read_text())
    if offline:
        raise NetworkFailure(f"offline mode and no cached copy of {url}")
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            text = resp.read().decode("utf-8")
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise NetworkFailure(f"could not fetch {url}: {exc}") from exc
    records = parse_payload(text)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".part")
    tmp.write_text(text)
    tmp.replace(path)
    path.with_suffix(".json").write_text(json.dumps({"url": url}))
    return records
