"""Synthetic accessibility: fragment-frequency term plus complexity penalties.

Fragment scores come from a table built over a reference corpus. Each radius
0..2 Morgan environment gets ``log10(count / ref)``, where ``ref`` is the
count of the fragment at which the descending cumulative count first covers
80% of all occurrences, clamped to [-4, 4]. Unseen fragments score -4.

The raw score follows Ertl's construction on the 1 (easy) .. 10 (hard)
scale and is reported as ``(10 - raw) / 9`` so that larger is easier.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

from .chem.mol import Molecule
from .fingerprints import morgan_counts

FORMAT = "mtdd-sascore-table"
FORMAT_VERSION = 1

RADIUS = 2
PERCENTILE = 0.8
SCORE_CLAMP = 4.0
DEFAULT_SCORE = -4.0
MACROCYCLE_SIZE = 8
# bounds of the summed score before mapping to the 1..10 scale
RAW_MIN = -4.0
RAW_MAX = 2.5
SIZE_EXPONENT = 1.005
SYMMETRY_WEIGHT = 0.5

_CONSTANTS = {
    "radius": RADIUS,
    "percentile": PERCENTILE,
    "score_clamp": SCORE_CLAMP,
    "macrocycle_size": MACROCYCLE_SIZE,
    "raw_min": RAW_MIN,
    "raw_max": RAW_MAX,
    "size_exponent": SIZE_EXPONENT,
    "symmetry_weight": SYMMETRY_WEIGHT,
}


class EmptyCorpus(ValueError):
    pass


class TableFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FragmentScoreTable:
    scores: dict[int, float]
    default_score: float = DEFAULT_SCORE
    meta: dict[str, str] = field(default_factory=dict)

    def score(self, frag_id: int) -> float:
        return self.scores.get(frag_id, self.default_score)

    def __len__(self) -> int:
        return len(self.scores)

    def dumps(self) -> str:
        lines = [
            f"#@ format: {FORMAT}",
            f"#@ version: {FORMAT_VERSION}",
            f"#@ default_score: {self.default_score!r}",
        ]
        lines += [f"#@ {k}: {v!r}" for k, v in _CONSTANTS.items()]
        lines += [f"#@ {k}: {v}" for k, v in sorted(self.meta.items())]
        lines += [f"{fid:016x}\t{s:.6f}" for fid, s in sorted(self.scores.items())]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> FragmentScoreTable:
        header: dict[str, str] = {}
        scores: dict[int, float] = {}
        for line in text.splitlines():
            if line.startswith("#@"):
                key, _, val = line[2:].partition(":")
                header[key.strip()] = val.strip()
            elif line.strip() and not line.startswith("#"):
                fid, _, s = line.partition("\t")
                scores[int(fid, 16)] = float(s)
        if header.get("format") != FORMAT:
            raise TableFormatError("not a fragment score table")
        if int(header.get("version", -1)) != FORMAT_VERSION:
            raise TableFormatError(f"unsupported table version {header.get('version')}")
        default = float(header.pop("default_score"))
        for key in ("format", "version", *_CONSTANTS):
            header.pop(key, None)
        return cls(scores, default, header)

    @classmethod
    def load(cls, path: str | Path) -> FragmentScoreTable:
        return cls.loads(Path(path).read_text())


def build_fragment_table(corpus: Iterable[Molecule], source: str = "") -> FragmentScoreTable:
    counts: Counter = Counter()
    n_mols = 0
    for mol in corpus:
        counts.update(morgan_counts(mol, RADIUS))
        n_mols += 1
    if not n_mols or not counts:
        raise EmptyCorpus("fragment table needs at least one molecule")
    # ties broken by id so the reference fragment is deterministic
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    total = sum(counts.values())
    cum, ref = 0, ranked[-1][1]
    for _, c in ranked:
        cum += c
        if cum >= PERCENTILE * total:
            ref = c
            break
    scores = {}
    for fid, c in counts.items():
        s = max(-SCORE_CLAMP, min(SCORE_CLAMP, math.log10(c / ref)))
        scores[fid] = round(s, 6)
    meta = {"molecules": str(n_mols)}
    if source:
        meta["source"] = source
    return FragmentScoreTable(scores, DEFAULT_SCORE, meta)


def _ring_junctions(mol: Molecule) -> tuple[int, int]:
    """(spiro atoms, bridgehead atoms) from pairwise SSSR ring overlaps."""
    rings = [set(r) for r in mol.rings]
    spiro: set[int] = set()
    bridge: set[int] = set()
    for a in range(len(rings)):
        for b in range(a + 1, len(rings)):
            shared = rings[a] & rings[b]
            if len(shared) == 1:
                spiro |= shared
            elif len(shared) > 2:
                # ends of the shared path are the bridgeheads
                for i in shared:
                    inside = sum(1 for j in mol.neighbors(i) if j in shared)
                    if inside <= 1:
                        bridge.add(i)
    return len(spiro), len(bridge)


@dataclass(frozen=True)
class SAComponents:
    fragment: float
    size: float
    stereo: float
    spiro: float
    bridgehead: float
    macrocycle: float
    symmetry: float
    raw: float
    score: float


def sa_components(mol: Molecule, table: FragmentScoreTable) -> SAComponents:
    counts = morgan_counts(mol, RADIUS)
    n_frag = sum(counts.values())
    fragment = sum(table.score(fid) * c for fid, c in counts.items()) / n_frag if n_frag else table.default_score

    n_atoms = mol.heavy_atom_count
    size = n_atoms**SIZE_EXPONENT - n_atoms
    stereo = math.log10(mol.stereo_count + 1)
    n_spiro, n_bridge = _ring_junctions(mol)
    spiro = math.log10(n_spiro + 1)
    bridgehead = math.log10(n_bridge + 1)
    macrocycle = math.log10(2) if any(len(r) > MACROCYCLE_SIZE for r in mol.rings) else 0.0
    symmetry = 0.0
    if counts and n_atoms > len(counts):
        symmetry = math.log(n_atoms / len(counts)) * SYMMETRY_WEIGHT

    total = fragment - size - stereo - spiro - bridgehead - macrocycle + symmetry
    raw = 11.0 - (total - RAW_MIN + 1.0) / (RAW_MAX - RAW_MIN) * 9.0
    if raw > 8.0:
        raw = 8.0 + math.log(raw + 1.0 - 9.0)
    raw = min(10.0, max(1.0, raw))
    return SAComponents(fragment, size, stereo, spiro, bridgehead, macrocycle, symmetry, raw, (10.0 - raw) / 9.0)


def sa_score(mol: Molecule, table: FragmentScoreTable) -> float:
    """Synthetic accessibility in [0, 1]; 1 is easiest."""
    return sa_components(mol, table).score
