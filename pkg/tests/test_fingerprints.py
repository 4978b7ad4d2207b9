import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import organic_corpus, permuted
from mtdd import _kernels
from mtdd.chem import parse_smiles, write_smiles
from mtdd.fingerprints import (
    Fingerprint,
    FingerprintConfig,
    LengthMismatch,
    SimilarityIndex,
    fingerprint_matrix,
    fingerprints,
    max_similarity_to_set,
    morgan_counts,
    morgan_fingerprint,
    tanimoto,
)

N_BITS = 1024


def fp_of(indices, n_bits=N_BITS):
    return Fingerprint.from_indices(indices, n_bits)


def test_methane_sets_one_bit():
    fp = morgan_fingerprint(parse_smiles("C"))
    assert fp.popcount == 1
    assert len(morgan_counts(parse_smiles("C"))) == 1


def test_atom_order_does_not_matter():
    assert morgan_fingerprint(parse_smiles("OCC")) == morgan_fingerprint(parse_smiles("CCO"))


def test_config_validation():
    with pytest.raises(ValueError):
        FingerprintConfig(n_bits=1000)
    with pytest.raises(ValueError):
        FingerprintConfig(radius=-1)


def test_collision_audit():
    mols = [m for _, m in organic_corpus()[:1000]]
    smiles = [write_smiles(m) for m in mols]
    fps = fingerprints(mols)
    rng = random.Random(3)
    distinct = same = 0
    for _ in range(5000):
        i, j = rng.sample(range(len(mols)), 2)
        if smiles[i] == smiles[j]:
            continue
        distinct += 1
        same += fps[i] == fps[j]
    assert distinct > 0
    assert (distinct - same) / distinct >= 0.99


def test_batched_matches_scalar():
    mols = [m for _, m in organic_corpus()[:300]] + [parse_smiles("C"), parse_smiles("[Na+].[Cl-]")]
    assert fingerprints(mols) == [morgan_fingerprint(m) for m in mols]
    cfg = FingerprintConfig(radius=3, n_bits=2048)
    assert fingerprints(mols, cfg) == [morgan_fingerprint(m, cfg) for m in mols]


def test_kernel_matches_numpy_fallback(monkeypatch):
    mols = [m for _, m in organic_corpus()[:200]]
    with_kernel = fingerprint_matrix(mols)
    monkeypatch.setattr(_kernels, "AVAILABLE", False)
    assert np.array_equal(fingerprint_matrix(mols), with_kernel)


def test_empty_batch():
    assert fingerprint_matrix([]).shape == (0, N_BITS)


def test_tanimoto_examples():
    a = fp_of([1, 2, 3])
    assert tanimoto(a, a) == 1.0
    assert tanimoto(a, fp_of([7, 8])) == 0.0
    assert tanimoto(a, fp_of([2, 3, 4])) == 0.5


def test_tanimoto_width_mismatch():
    with pytest.raises(LengthMismatch):
        tanimoto(fp_of([1], 1024), fp_of([1], 2048))


def test_max_similarity_examples():
    q = fp_of([1, 5, 9])
    assert max_similarity_to_set(q, [fp_of([2]), q]) == 1.0
    assert max_similarity_to_set(q, [fp_of([3])]) == 0.0
    with pytest.raises(ValueError):
        SimilarityIndex([])


def _random_fp(rng, n_bits=256):
    k = rng.randint(0, 40)
    return fp_of(rng.sample(range(n_bits), k), n_bits)


def test_pruned_search_equals_full_scan():
    rng = random.Random(11)
    refs = [_random_fp(rng) for _ in range(200)]
    index = SimilarityIndex(refs)
    for _ in range(200):
        q = _random_fp(rng)
        brute = max(len(set(q.on_bits()) & set(r.on_bits())) / len(set(q.on_bits()) | set(r.on_bits()))
                    if (q.bits | r.bits) else 1.0 for r in refs)
        assert index.max_similarity(q) == brute


bitsets = st.sets(st.integers(0, 127), max_size=30)


@settings(max_examples=200, deadline=None)
@given(a=bitsets, b=bitsets)
def test_tanimoto_properties(a, b):
    fa, fb = fp_of(a, 128), fp_of(b, 128)
    s = tanimoto(fa, fb)
    assert s == tanimoto(fb, fa)
    assert 0.0 <= s <= 1.0
    assert tanimoto(fa, fa) == 1.0
    if a | b:
        assert s == len(a & b) / len(a | b)


_SAMPLE = [m for _, m in organic_corpus()[:300]]


@settings(max_examples=50, deadline=None)
@given(idx=st.integers(0, len(_SAMPLE) - 1), seed=st.integers(0, 2**32 - 1))
def test_fingerprint_permutation_invariance(idx, seed):
    mol = _SAMPLE[idx]
    assert morgan_fingerprint(permuted(mol, random.Random(seed))) == morgan_fingerprint(mol)


def test_similarity_matrix_symmetry_on_corpus():
    fps = fingerprints(_SAMPLE[:40])
    for a, b in itertools.combinations(fps, 2):
        assert tanimoto(a, b) == tanimoto(b, a)
