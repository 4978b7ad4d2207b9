import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import organic_corpus
from mtdd.chem import parse_smiles
from mtdd.sascore import (
    EmptyCorpus,
    FragmentScoreTable,
    TableFormatError,
    build_fragment_table,
    sa_components,
    sa_score,
)

MACROCYCLE = "[C@H]1(C)CCC[C@@H](C)CCC[C@H](C)CCC[C@@H](C)CCC1"


@pytest.fixture(scope="module")
def table():
    return build_fragment_table((m for _, m in organic_corpus()[:2000]), source="corpus")


def test_methane_corpus():
    t = build_fragment_table([parse_smiles("C")] * 1000)
    assert len(t) == 1
    assert list(t.scores.values()) == [0.0]


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        build_fragment_table([])


def test_rebuild_is_byte_identical(table):
    again = build_fragment_table((m for _, m in organic_corpus()[:2000]), source="corpus")
    assert again.dumps() == table.dumps()


def test_serialization_round_trip(table, tmp_path):
    path = tmp_path / "sa.tsv"
    table.save(path)
    loaded = FragmentScoreTable.load(path)
    assert loaded.scores == table.scores
    assert loaded.default_score == table.default_score
    assert loaded.dumps() == table.dumps()


def test_bad_table_header():
    with pytest.raises(TableFormatError):
        FragmentScoreTable.loads("0000000000000001\t0.5\n")


def test_macrocycle_penalties(table):
    mol = parse_smiles(MACROCYCLE)
    assert max(len(r) for r in mol.rings) == 16
    c = sa_components(mol, table)
    assert c.stereo == pytest.approx(math.log10(4 + 1))
    assert c.macrocycle == pytest.approx(math.log10(2))
    assert c.spiro == 0 and c.bridgehead == 0


def test_hexane_beats_macrocycle(table):
    hexane = sa_components(parse_smiles("CCCCCC"), table)
    macro = sa_components(parse_smiles(MACROCYCLE), table)
    assert hexane.score > macro.score
    penalties = lambda c: c.size + c.stereo + c.spiro + c.bridgehead + c.macrocycle
    assert penalties(macro) > penalties(hexane)


def test_spiro_and_bridgehead_detected(table):
    spiro = sa_components(parse_smiles("C1CCC2(CC1)CCCC2"), table)
    assert spiro.spiro == pytest.approx(math.log10(2))
    norbornane = sa_components(parse_smiles("C1CC2CCC1C2"), table)
    assert norbornane.bridgehead == pytest.approx(math.log10(3))


def test_deterministic(table):
    m = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
    assert sa_score(m, table) == sa_score(m, table)


@settings(max_examples=100, deadline=None)
@given(idx=st.integers(0, len(organic_corpus()) - 1))
def test_score_bounds(table, idx):
    s = sa_score(organic_corpus()[idx][1], table)
    assert 0.0 <= s <= 1.0
