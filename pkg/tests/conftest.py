import re

import pytest

from helpers import organic_corpus
from mtdd.qsar import BioassayDataset, train_model
from mtdd.sascore import build_fragment_table
from mtdd.scoring import BenchmarkSpec, load_spec


def _labelled(rule, n=600, offset=0):
    rows = [(smi, int(rule(m))) for smi, m in organic_corpus()[offset : offset + n]]
    return BioassayDataset.from_smiles(rows)


def has_nitrogen(m):
    return any(a.element == "N" for a in m.atoms)


def has_ring(m):
    return bool(m.rings)


def small_and_neutral(m):
    return m.heavy_atom_count <= 25 and not any(a.element == "O" and a.total_h for a in m.atoms)


@pytest.fixture(scope="session")
def toy_models():
    """Two toy target classifiers and a toy BBB classifier."""
    hp = {"n_trees": 25, "max_depth": 12}
    return {
        "t1": train_model(_labelled(has_nitrogen), "random-forest", hp, seed=1, name="t1"),
        "t2": train_model(_labelled(has_ring, offset=600), "extra-trees", hp, seed=2, name="t2"),
        "bbb": train_model(_labelled(small_and_neutral, offset=1200), "random-forest", hp, seed=3, name="bbb"),
    }


@pytest.fixture(scope="session")
def sa_table():
    return build_fragment_table((m for _, m in organic_corpus()[:3000]), source="test corpus")


@pytest.fixture(scope="session")
def spec_dir(tmp_path_factory, toy_models, sa_table):
    d = tmp_path_factory.mktemp("spec")
    for name, model in toy_models.items():
        model.save(d / f"{name}.json")
    sa_table.save(d / "sa.tsv")
    spec = BenchmarkSpec(
        "toy",
        (toy_models["t1"], toy_models["t2"]),
        toy_models["bbb"],
        sa_table=sa_table,
        paths={"target_models": ["t1.json", "t2.json"], "bbb_model": "bbb.json", "sa_table": "sa.tsv"},
    )
    spec.save(d / "spec.json")
    return d


@pytest.fixture(scope="session")
def toy_spec(spec_dir):
    return load_spec(spec_dir / "spec.json")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            match = re.search(r"test_criterion_(\d+)_(\w+)", getattr(rep, "nodeid", ""))
            if match and rep.when in ("call", "setup"):
                number = int(match.group(1))
                if outcomes.get(number, ("PASS",))[0] == "PASS":
                    outcomes[number] = ("PASS" if key == "passed" else "FAIL", match.group(2).replace("_", " "))
    if outcomes:
        terminalreporter.section("acceptance criteria")
        for number in sorted(outcomes):
            status, name = outcomes[number]
            terminalreporter.write_line(f"criterion {number:2d}: {status}  {name}")
