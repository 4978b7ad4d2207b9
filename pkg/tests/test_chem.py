import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import corpus, isomorphic, organic_corpus, permuted
from mtdd.chem import (
    ChemError,
    UnbalancedParenthesis,
    UnclosedRingBond,
    UnknownElement,
    ValenceViolation,
    canonical_smiles,
    parse_smiles,
    write_smiles,
)
from mtdd.chem.normalize import neutralize_charges, passes_element_filter, strip_salts

ASPIRIN = "CC(=O)Oc1ccccc1C(=O)O"


def test_methane():
    m = parse_smiles("C")
    assert m.heavy_atom_count == 1
    assert m.atoms[0].implicit_h == 4
    assert m.bonds == () or len(m.bonds) == 0


def test_aspirin_counts():
    m = parse_smiles(ASPIRIN)
    assert m.heavy_atom_count == 13
    assert len(m.bonds) == 13
    assert [len(r) for r in m.rings] == [6]
    assert sum(a.aromatic for a in m.atoms) == 6


@pytest.mark.parametrize(
    "text, err",
    [("C(", UnbalancedParenthesis), ("C)", UnbalancedParenthesis), ("C1CC", UnclosedRingBond), ("[Xx]", UnknownElement)],
)
def test_syntax_errors(text, err):
    with pytest.raises(err):
        parse_smiles(text)


def test_valence_violation():
    with pytest.raises(ValenceViolation):
        parse_smiles("C(C)(C)(C)(C)C")


def test_error_carries_position():
    with pytest.raises(ChemError) as info:
        parse_smiles("CC(C")
    assert "CC(C" in str(info.value) or getattr(info.value, "position", None) is not None


def test_benzene_implicit_h():
    m = parse_smiles("c1ccccc1")
    assert [(a.element, a.aromatic, a.implicit_h) for a in m.atoms] == [("C", True, 1)] * 6


def test_benzene_against_rdkit():
    Chem = pytest.importorskip("rdkit.Chem")
    ref = Chem.MolFromSmiles("c1ccccc1")
    ours = parse_smiles("c1ccccc1")
    assert [a.GetTotalNumHs() for a in ref.GetAtoms()] == [a.total_h for a in ours.atoms]


def test_round_trip_ethanol():
    m = parse_smiles("CCO")
    again = parse_smiles(write_smiles(m))
    assert again.heavy_atom_count == 3
    assert isomorphic(m, again)


def test_ethanol_orderings_coincide():
    a, b = parse_smiles("OCC"), parse_smiles("CCO")
    assert isomorphic(a, b)
    assert write_smiles(a) == write_smiles(b)


def test_single_nitrogen():
    assert write_smiles(parse_smiles("N")) == "N"


def test_canonical_smiles_is_idempotent_on_aspirin():
    once = canonical_smiles(ASPIRIN)
    assert canonical_smiles(once) == once


def test_writer_agrees_with_rdkit_on_corpus_sample():
    Chem = pytest.importorskip("rdkit.Chem")
    for smi, mol in corpus()[:300]:
        ref = Chem.MolFromSmiles(smi)
        if ref is None:
            continue
        ours = Chem.MolFromSmiles(write_smiles(mol))
        assert ours is not None, smi
        assert Chem.MolToSmiles(ours) == Chem.MolToSmiles(ref), smi


def test_strip_salts_acetate():
    out = strip_salts(parse_smiles("CC(=O)[O-].[Na+]"))
    assert out.heavy_atom_count == 4
    assert write_smiles(out) == write_smiles(parse_smiles("CC(=O)[O-]"))


def test_strip_salts_single_fragment_unchanged():
    m = parse_smiles(ASPIRIN)
    assert strip_salts(m) is m


def test_strip_salts_tie_goes_to_heavier_fragment():
    assert write_smiles(strip_salts(parse_smiles("C.N"))) == "N"
    assert write_smiles(strip_salts(parse_smiles("N.C"))) == "N"


def test_neutralize_carboxylate():
    out = neutralize_charges(parse_smiles("CC(=O)[O-]"))
    assert out.formal_charge == 0
    assert write_smiles(out) == canonical_smiles("CC(=O)O")


def test_neutralize_leaves_neutral_and_quaternary():
    neutral = parse_smiles("CCO")
    assert neutralize_charges(neutral) is neutral
    quat = parse_smiles("C[N+](C)(C)C")
    assert write_smiles(neutralize_charges(quat)) == write_smiles(quat)


def test_neutralize_keeps_nitro():
    nitro = parse_smiles("C[N+](=O)[O-]")
    assert write_smiles(neutralize_charges(nitro)) == write_smiles(nitro)


def test_neutralize_protonated_amine():
    assert write_smiles(neutralize_charges(parse_smiles("CC[NH3+]"))) == canonical_smiles("CCN")


@pytest.mark.parametrize("smi, ok", [(ASPIRIN, True), ("[Se]", True), ("[Fe]", False), ("C1=CC=C[CH-]1.[Fe+2]", False)])
def test_element_filter(smi, ok):
    assert passes_element_filter(parse_smiles(smi)) is ok


_SAMPLE = [m for _, m in organic_corpus()[:400]]


@settings(max_examples=60, deadline=None)
@given(idx=st.integers(0, len(_SAMPLE) - 1), seed=st.integers(0, 2**32 - 1))
def test_writer_is_permutation_invariant(idx, seed):
    mol = _SAMPLE[idx]
    shuffled = permuted(mol, random.Random(seed))
    assert isomorphic(mol, shuffled)
    assert write_smiles(shuffled) == write_smiles(mol)


@settings(max_examples=60, deadline=None)
@given(idx=st.integers(0, len(_SAMPLE) - 1))
def test_canonical_form_is_fixed_point(idx):
    smi = write_smiles(_SAMPLE[idx])
    again = parse_smiles(smi)
    assert isomorphic(_SAMPLE[idx], again)
    assert write_smiles(again) == smi
