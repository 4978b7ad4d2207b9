import random
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import nitrogen_dataset, organic_corpus
from mtdd.chem import parse_smiles
from mtdd.fingerprints import DEFAULT_CONFIG, morgan_fingerprint
from mtdd.qsar import (
    AutoMLConfig,
    BioassayDataset,
    Candidate,
    Metrics,
    ModelFormatError,
    SingleClassDataset,
    SingleClassTestSet,
    Tree,
    TreeEnsembleModel,
    accuracy,
    automl_search,
    evaluate,
    predict,
    predict_batch,
    roc_auc,
    run_search,
    select_best,
    staged_probabilities,
    train_model,
)
from mtdd.qsar.train import _estimator, features


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return total / (len(pos) * len(neg))


def test_roc_auc_fixture():
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_perfect_and_tied():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert accuracy([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.3] * 6, [0, 1, 0, 1, 1, 0]) == 0.5


def test_single_class_test_set():
    with pytest.raises(SingleClassTestSet):
        roc_auc([0.1, 0.2], [1, 1])


@settings(max_examples=200, deadline=None)
@given(data=st.lists(st.tuples(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]), st.integers(0, 1)), min_size=2, max_size=40))
def test_roc_auc_matches_pairwise_counting(data):
    scores, labels = zip(*data)
    if len(set(labels)) < 2:
        return
    assert roc_auc(scores, labels) == pytest.approx(brute_auc(scores, labels), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(scores=st.lists(st.integers(-1000, 1000), min_size=4, max_size=30), seed=st.integers(0, 1000))
def test_roc_auc_invariant_under_monotone_transform(scores, seed):
    rng = random.Random(seed)
    labels = [rng.randint(0, 1) for _ in scores]
    labels[0], labels[1] = 0, 1
    squashed = [s**3 + 7 for s in scores]
    assert roc_auc(squashed, labels) == pytest.approx(roc_auc(scores, labels), abs=1e-12)


def test_duplicates_take_majority_ties_active():
    ds = BioassayDataset.from_smiles([("CCO", 0), ("OCC", 0), ("CCO", 1), ("CCN", 0), ("NCC", 1)])
    assert len(ds) == 2
    assert ds.labels == (0, 1)


def test_single_class_dataset():
    ds = BioassayDataset.from_smiles([("CCO", 1), ("CCN", 1)])
    with pytest.raises(SingleClassDataset):
        train_model(ds, "decision-tree")


def _methane_bit():
    return morgan_fingerprint(parse_smiles("C")).on_bits()[0]


def test_hand_built_three_tree_model():
    b = _methane_bit()
    other = (b + 1) % DEFAULT_CONFIG.n_bits
    split_on = lambda f, lo, hi: Tree((f, -2, -2), (0.5, -2.0, -2.0), (1, -1, -1), (2, -1, -1), (0.0, lo, hi))
    model = TreeEnsembleModel("random-forest", (split_on(b, 0.0, 1.0), split_on(other, 0.2, 0.9), Tree.leaf(0.5)), DEFAULT_CONFIG)
    # methane sets bit b only: tree 1 goes right (1.0), tree 2 goes left (0.2), tree 3 is a leaf (0.5)
    assert predict(model, parse_smiles("C")) == pytest.approx((1.0 + 0.2 + 0.5) / 3)
    assert predict_batch(model, [parse_smiles("C")]) == [predict(model, parse_smiles("C"))]


def test_unanimous_and_split_votes():
    m = parse_smiles("CCO")
    ones = TreeEnsembleModel("random-forest", (Tree.leaf(1.0),) * 4, DEFAULT_CONFIG)
    half = TreeEnsembleModel("random-forest", (Tree.leaf(1.0), Tree.leaf(0.0)) * 2, DEFAULT_CONFIG)
    assert predict(ones, m) == 1.0
    assert predict(half, m) == 0.5


def test_tree_validation():
    with pytest.raises(ModelFormatError):
        Tree((0, -2), (0.5, -2.0), (1, -1), (-1, -1), (0.0, 1.0))
    with pytest.raises(ModelFormatError):
        TreeEnsembleModel("random-forest", (), DEFAULT_CONFIG)
    with pytest.raises(ModelFormatError):
        TreeEnsembleModel("svm", (Tree.leaf(1.0),), DEFAULT_CONFIG)


@pytest.fixture(scope="module")
def nitrogen500():
    return nitrogen_dataset(500)


@pytest.fixture(scope="module")
def forest(nitrogen500):
    return train_model(nitrogen500, "random-forest", {"n_trees": 50}, seed=1)


def test_separable_training_accuracy(nitrogen500, forest):
    assert evaluate(forest, nitrogen500).accuracy >= 0.99


def test_batch_equals_loop(forest):
    mols = [m for _, m in organic_corpus()[1000:2000]]
    assert predict_batch(forest, mols) == [predict(forest, m) for m in mols]
    assert predict_batch(forest, []) == []


@pytest.mark.parametrize("algorithm, hp", [
    ("decision-tree", {"max_depth": 6}),
    ("random-forest", {"n_trees": 20}),
    ("extra-trees", {"n_trees": 20}),
    ("gradient-boosting", {"rounds": 30, "max_depth": 3}),
])
def test_export_matches_library_probabilities(nitrogen500, algorithm, hp):
    model = train_model(nitrogen500, algorithm, hp, seed=5)
    X = features(nitrogen500, DEFAULT_CONFIG)
    est = _estimator(algorithm, hp, 5, 1).fit(X, np.asarray(nitrogen500.labels))
    expected = est.predict_proba(X)[:, 1]
    ours = predict_batch(model, list(nitrogen500.molecules))
    assert np.allclose(ours, expected, atol=1e-9)


def test_serialization_round_trip(forest, tmp_path):
    path = tmp_path / "m.json"
    forest.save(path)
    loaded = TreeEnsembleModel.load(path)
    assert loaded.dumps() == forest.dumps()
    mols = [m for _, m in organic_corpus()[:50]]
    assert predict_batch(loaded, mols) == predict_batch(forest, mols)


def test_corrupt_model_rejected():
    with pytest.raises(ModelFormatError):
        TreeEnsembleModel.loads("{not json")
    with pytest.raises(ModelFormatError):
        TreeEnsembleModel.loads('{"format": "something-else"}')


def test_same_seed_same_bytes(nitrogen500):
    a = train_model(nitrogen500, "extra-trees", {"n_trees": 10}, seed=3)
    b = train_model(nitrogen500, "extra-trees", {"n_trees": 10}, seed=3)
    assert a.dumps() == b.dumps()


def test_boosting_training_loss_non_increasing(nitrogen500):
    model = train_model(nitrogen500, "gradient-boosting", {"rounds": 40, "max_depth": 2, "learning_rate": 0.1}, seed=0)
    X = features(nitrogen500, DEFAULT_CONFIG)
    y = np.asarray(nitrogen500.labels)
    p = np.clip(staged_probabilities(model, X), 1e-12, 1 - 1e-12)
    loss = -(y * np.log(p) + (1 - y) * np.log(1 - p)).mean(axis=1)
    assert np.all(np.diff(loss) <= 1e-12)
    # stage 0 starts from the training prior
    prior = y.mean()
    assert loss[0] < -(prior * np.log(prior) + (1 - prior) * np.log(1 - prior))


def _split(n, seed=0):
    idx = list(range(n))
    random.Random(seed).shuffle(idx)
    cut = n * 3 // 4
    return SimpleNamespace(train_indices=tuple(sorted(idx[:cut])), test_indices=tuple(sorted(idx[cut:])))


def test_select_best_rules():
    ms = [Metrics(0.7, 0.6, 10), Metrics(0.8, 0.9, 10), Metrics(0.9, 0.9, 10), Metrics(1.0, None, 10)]
    assert select_best(ms) == 2
    assert select_best([Metrics(0.5, 0.9, 10), Metrics(0.5, 0.9, 10)]) == 0


def test_search_returns_higher_auc_candidate(nitrogen500):
    split = _split(len(nitrogen500))
    weak = Candidate("decision-tree", {"max_depth": 1, "min_leaf": 200}, 0)
    strong = Candidate("random-forest", {"n_trees": 30, "max_depth": 12, "max_features": "sqrt"}, 0)
    cfg = AutoMLConfig(max_candidates=2, candidate_algorithms=("decision-tree", "random-forest"))
    for order in ([weak, strong], [strong, weak]):
        result = run_search(nitrogen500, split, cfg, candidates=order)
        aucs = [m.roc_auc for _, m in result.history]
        assert aucs[result.best_index] == max(aucs)
        assert result.model.algorithm == "random-forest"


def test_one_candidate_budget(nitrogen500):
    split = _split(len(nitrogen500))
    result = run_search(nitrogen500, split, AutoMLConfig(max_candidates=1, search_seed=4))
    assert len(result.history) == 1 and result.best_index == 0
    assert result.model.algorithm == result.history[0][0].algorithm


def test_time_budget_always_evaluates_one(nitrogen500):
    ticks = iter([0.0, 10.0, 20.0, 30.0])
    split = _split(len(nitrogen500))
    cfg = AutoMLConfig(time_budget=1.0, candidate_algorithms=("decision-tree",))
    result = run_search(nitrogen500, split, cfg, clock=lambda: next(ticks))
    assert len(result.history) == 1


def test_count_budget_is_deterministic(nitrogen500):
    split = _split(len(nitrogen500), seed=2)
    cfg = AutoMLConfig(max_candidates=3, search_seed=9, candidate_algorithms=("decision-tree", "gradient-boosting"))
    a = automl_search(nitrogen500, split, cfg)
    b = automl_search(nitrogen500, split, cfg)
    assert a.dumps() == b.dumps()
    assert a.metrics["candidates_evaluated"] == 3
