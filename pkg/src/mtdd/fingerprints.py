"""Morgan circular fingerprints and Tanimoto similarity.

Identifiers are 64-bit values produced by :func:`hash_ints`, a fold of the
splitmix64 finalizer over a sequence of unsigned 64-bit integers (negative
values are taken modulo 2**64). The layouts hashed are:

* round 0: ``[atomic number, heavy degree, total H, formal charge, in ring, aromatic]``
* round r: ``[r, previous id, code_1, id_1, code_2, id_2, ...]`` with the
  neighbor ``(bond code, id)`` pairs sorted ascending; bond codes are 1/2/3
  for single/double/triple and 4 for aromatic.

Atoms without neighbors keep their identifier across rounds. Every
identifier of every round sets bit ``id % n_bits``.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chem.elements import ATOMIC_NUMBER
from .chem.mol import Molecule

MASK = (1 << 64) - 1
SEED = 0x243F6A8885A308D3
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _fmix(x: int) -> int:
    x ^= x >> 30
    x = (x * _M1) & MASK
    x ^= x >> 27
    x = (x * _M2) & MASK
    x ^= x >> 31
    return x


def hash_ints(values: Sequence[int]) -> int:
    h = SEED
    for v in values:
        h = _fmix(h ^ _fmix((v + GOLDEN) & MASK))
    return h


@dataclass(frozen=True)
class FingerprintConfig:
    radius: int = 2
    n_bits: int = 1024

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        if self.n_bits <= 0 or self.n_bits & (self.n_bits - 1):
            raise ValueError("n_bits must be a positive power of two")

    def to_dict(self) -> dict:
        return {"radius": self.radius, "n_bits": self.n_bits}

    @classmethod
    def from_dict(cls, data: dict) -> FingerprintConfig:
        return cls(radius=int(data["radius"]), n_bits=int(data["n_bits"]))


DEFAULT_CONFIG = FingerprintConfig()


@dataclass(frozen=True)
class Fingerprint:
    """Folded binary fingerprint stored as a Python integer bitset."""

    bits: int
    n_bits: int

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def on_bits(self) -> list[int]:
        out, b, i = [], self.bits, 0
        while b:
            if b & 1:
                out.append(i)
            b >>= 1
            i += 1
        return out

    def to_array(self) -> np.ndarray:
        arr = np.zeros(self.n_bits, dtype=np.uint8)
        arr[self.on_bits()] = 1
        return arr

    @classmethod
    def from_indices(cls, indices, n_bits: int) -> Fingerprint:
        bits = 0
        for i in indices:
            if not 0 <= i < n_bits:
                raise ValueError(f"bit {i} outside 0..{n_bits - 1}")
            bits |= 1 << i
        return cls(bits, n_bits)


class LengthMismatch(ValueError):
    pass


def _initial_ids(mol: Molecule) -> list[int]:
    return [
        hash_ints(
            (
                ATOMIC_NUMBER[a.element],
                mol.degree(i),
                a.total_h,
                a.formal_charge & MASK,
                int(a.in_ring),
                int(a.aromatic),
            )
        )
        for i, a in enumerate(mol.atoms)
    ]


def environment_ids(mol: Molecule, radius: int) -> list[list[int]]:
    """Identifiers per round: ``out[r][atom]`` for ``r`` in ``0..radius``."""
    ids = _initial_ids(mol)
    rounds = [ids]
    adj = mol.adjacency
    for r in range(1, radius + 1):
        new = []
        for i, prev in enumerate(ids):
            if not adj[i]:
                new.append(prev)
                continue
            pairs = sorted((int(mol.bonds[bi].order), ids[j]) for j, bi in adj[i])
            seq = [r, prev]
            for code, nid in pairs:
                seq.append(code)
                seq.append(nid)
            new.append(hash_ints(seq))
        ids = new
        rounds.append(ids)
    return rounds


def morgan_counts(mol: Molecule, radius: int = 2) -> Counter:
    """Unfolded identifier counts over all rounds."""
    counts: Counter = Counter()
    rounds = environment_ids(mol, radius)
    for r, ids in enumerate(rounds):
        for i, v in enumerate(ids):
            # isolated atoms contribute only their round-0 identifier
            if r and not mol.adjacency[i]:
                continue
            counts[v] += 1
    return counts


def morgan_fingerprint(mol: Molecule, cfg: FingerprintConfig = DEFAULT_CONFIG) -> Fingerprint:
    bits = 0
    mask = cfg.n_bits - 1
    for ids in environment_ids(mol, cfg.radius):
        for v in ids:
            bits |= 1 << (v & mask)
    return Fingerprint(bits, cfg.n_bits)


# ---------------------------------------------------------------------------
# batched path (numpy, bit-identical to the scalar path)

_U = np.uint64


def _np_fmix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _U(30))
    x = x * _U(_M1)
    x = x ^ (x >> _U(27))
    x = x * _U(_M2)
    return x ^ (x >> _U(31))


def _np_step(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    return _np_fmix(h ^ _np_fmix(v + _U(GOLDEN)))


def fingerprint_matrix(mols: Sequence[Molecule], cfg: FingerprintConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Dense ``(len(mols), n_bits)`` uint8 matrix of fingerprints."""
    out = np.zeros((len(mols), cfg.n_bits), dtype=np.uint8)
    if not mols:
        return out
    rows, bit_idx = _batched_bits(mols, cfg)
    out[rows, bit_idx] = 1
    return out


def fingerprints(mols: Sequence[Molecule], cfg: FingerprintConfig = DEFAULT_CONFIG) -> list[Fingerprint]:
    """Batched equivalent of ``[morgan_fingerprint(m, cfg) for m in mols]``."""
    return [
        Fingerprint(int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little"), cfg.n_bits)
        for row in fingerprint_matrix(mols, cfg)
    ]


def _batched_bits(mols: Sequence[Molecule], cfg: FingerprintConfig):
    with np.errstate(over="ignore"):
        n_atoms = np.array([len(m.atoms) for m in mols], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(n_atoms)[:-1]])
        total = int(n_atoms.sum())
        mol_of_atom = np.repeat(np.arange(len(mols)), n_atoms)
        z, hs, chg, ring, arom = [], [], [], [], []
        eb, ee, eo = [], [], []
        for m, off in zip(mols, offsets.tolist()):
            atoms = m.atoms
            z.extend([ATOMIC_NUMBER[a.element] for a in atoms])
            hs.extend([a.explicit_h + a.implicit_h for a in atoms])
            chg.extend([a.formal_charge for a in atoms])
            ring.extend([a.in_ring for a in atoms])
            arom.extend([a.aromatic for a in atoms])
            eb.extend([b.begin + off for b in m.bonds])
            ee.extend([b.end + off for b in m.bonds])
            eo.extend([int(b.order) for b in m.bonds])
        src = np.array(eb + ee, dtype=np.int64)
        dst = np.array(ee + eb, dtype=np.int64)
        bcode = np.array(eo + eo, dtype=np.uint64)
        degree = np.bincount(src, minlength=total)
        feats = np.empty((total, 6), dtype=np.uint64)
        feats[:, 0] = z
        feats[:, 1] = degree
        feats[:, 2] = hs
        feats[:, 3] = np.array(chg, dtype=np.int64).astype(np.uint64)
        feats[:, 4] = ring
        feats[:, 5] = arom
        width = max(int(degree.max()) if total else 0, 1)
        nbr = np.full((total, width), -1, dtype=np.int64)
        code = np.full((total, width), 255, dtype=np.uint64)
        if len(src):
            order = np.argsort(src, kind="stable")
            s_src = src[order]
            first = np.concatenate([[0], np.cumsum(degree)[:-1]])
            pos = np.arange(len(s_src)) - first[s_src]
            nbr[s_src, pos] = dst[order]
            code[s_src, pos] = bcode[order]
        deg = (nbr >= 0).sum(axis=1)
        if _kernels.AVAILABLE:
            rounds = _kernels.morgan_rounds(feats, nbr, code, deg, cfg.radius)
            bit_idx = (rounds.ravel() & _U(cfg.n_bits - 1)).astype(np.int64)
            return np.tile(mol_of_atom, cfg.radius + 1), bit_idx

        h = np.full(total, SEED, dtype=np.uint64)
        for c in range(6):
            h = _np_step(h, feats[:, c])
        ids = h
        collected = [ids]
        valid = nbr >= 0
        safe_nbr = np.where(valid, nbr, 0)
        isolated = deg == 0
        for r in range(1, cfg.radius + 1):
            nid = np.where(valid, ids[safe_nbr], _U(0))
            order = np.lexsort((nid, code), axis=-1)
            s_code = np.take_along_axis(code, order, axis=1)
            s_id = np.take_along_axis(nid, order, axis=1)
            h = np.full(total, SEED, dtype=np.uint64)
            h = _np_step(h, np.full(total, r, dtype=np.uint64))
            h = _np_step(h, ids)
            for k in range(nbr.shape[1]):
                live = k < deg
                h2 = _np_step(_np_step(h, s_code[:, k]), s_id[:, k])
                h = np.where(live, h2, h)
            ids = np.where(isolated, ids, h)
            collected.append(ids)
        all_ids = np.concatenate(collected)
        bit_idx = (all_ids & _U(cfg.n_bits - 1)).astype(np.int64)
        rows = np.tile(mol_of_atom, len(collected))
    return rows, bit_idx


# ---------------------------------------------------------------------------
# similarity


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    if a.n_bits != b.n_bits:
        raise LengthMismatch(f"fingerprint widths differ: {a.n_bits} vs {b.n_bits}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


def _bound(pq: int, pr: int) -> float:
    if pq == 0 and pr == 0:
        return 1.0
    return min(pq, pr) / max(pq, pr)


class SimilarityIndex:
    """Reference set for repeated exact max-similarity queries.

    References are visited in decreasing order of the popcount bound
    ``min(|q|,|r|)/max(|q|,|r|)``, and the scan stops once the bound cannot
    beat the best similarity found.
    """

    def __init__(self, refs: Sequence[Fingerprint]):
        if not refs:
            raise ValueError("reference set is empty")
        self.refs = list(refs)
        self.n_bits = refs[0].n_bits
        self.pop = np.array([r.popcount for r in self.refs], dtype=np.int64)

    def max_similarity(self, query: Fingerprint) -> float:
        if query.n_bits != self.n_bits:
            raise LengthMismatch(f"fingerprint widths differ: {query.n_bits} vs {self.n_bits}")
        pq = query.popcount
        lo = np.minimum(self.pop, pq)
        hi = np.maximum(self.pop, pq)
        bounds = np.where(hi == 0, 1.0, lo / np.maximum(hi, 1))
        best = -1.0
        for k in np.argsort(-bounds, kind="stable"):
            if bounds[k] <= best:
                break
            s = tanimoto(query, self.refs[k])
            if s > best:
                best = s
                if best >= 1.0:
                    break
        return best


def max_similarity_to_set(query: Fingerprint, refs: Sequence[Fingerprint]) -> float:
    return SimilarityIndex(refs).max_similarity(query)
