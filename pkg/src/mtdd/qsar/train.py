"""Fitting tree ensembles and exporting them to the flat model format.

Tree growing is delegated to scikit-learn; the fitted estimators are
converted to :class:`~mtdd.qsar.model.TreeEnsembleModel` and never used for
prediction afterwards.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.ensemble import ExtraTreesClassifier, GradientBoostingClassifier, RandomForestClassifier
from sklearn.tree import DecisionTreeClassifier

from ..fingerprints import DEFAULT_CONFIG, FingerprintConfig, fingerprint_matrix
from .dataset import BioassayDataset
from .metrics import Metrics, score_metrics
from .model import ALGORITHMS, Tree, TreeEnsembleModel, predict_batch, predict_matrix


def _max_features(value):
    if value in (None, "sqrt", "log2"):
        return value
    return float(value)


def _estimator(algorithm: str, hp: dict, seed: int, n_jobs: int):
    if algorithm == "decision-tree":
        return DecisionTreeClassifier(
            max_depth=hp.get("max_depth"),
            min_samples_leaf=hp.get("min_leaf", 1),
            random_state=seed,
        )
    if algorithm in ("random-forest", "extra-trees"):
        cls = RandomForestClassifier if algorithm == "random-forest" else ExtraTreesClassifier
        return cls(
            n_estimators=hp.get("n_trees", 100),
            max_depth=hp.get("max_depth"),
            max_features=_max_features(hp.get("max_features", "sqrt")),
            min_samples_leaf=hp.get("min_leaf", 1),
            bootstrap=algorithm == "random-forest",
            random_state=seed,
            n_jobs=n_jobs,
        )
    if algorithm == "gradient-boosting":
        return GradientBoostingClassifier(
            loss="log_loss",
            n_estimators=hp.get("rounds", 100),
            max_depth=hp.get("max_depth", 3),
            learning_rate=hp.get("learning_rate", 0.1),
            random_state=seed,
        )
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def _export_classifier_tree(est) -> Tree:
    t = est.tree_
    counts = t.value[:, 0, :]
    totals = counts.sum(axis=1)
    # column of class 1 in estimator.classes_
    col = list(est.classes_).index(1)
    frac = np.divide(counts[:, col], totals, out=np.zeros_like(totals), where=totals > 0)
    return Tree(
        tuple(int(v) for v in t.feature),
        tuple(float(v) for v in t.threshold),
        tuple(int(v) for v in t.children_left),
        tuple(int(v) for v in t.children_right),
        tuple(float(v) for v in frac),
    )


def _export_regression_tree(est) -> Tree:
    t = est.tree_
    return Tree(
        tuple(int(v) for v in t.feature),
        tuple(float(v) for v in t.threshold),
        tuple(int(v) for v in t.children_left),
        tuple(int(v) for v in t.children_right),
        tuple(float(v) for v in t.value[:, 0, 0]),
    )


def features(dataset: BioassayDataset, cfg: FingerprintConfig) -> np.ndarray:
    return fingerprint_matrix(list(dataset.molecules), cfg)


def train_model(
    train: BioassayDataset,
    algorithm: str,
    hyperparams: dict | None = None,
    seed: int = 0,
    fingerprint_cfg: FingerprintConfig = DEFAULT_CONFIG,
    n_jobs: int = 1,
    name: str = "",
    X: np.ndarray | None = None,
) -> TreeEnsembleModel:
    train.require_trainable()
    hp = dict(hyperparams or {})
    if X is None:
        X = features(train, fingerprint_cfg)
    y = np.asarray(train.labels)
    est = _estimator(algorithm, hp, seed, n_jobs)
    est.fit(X, y)

    if algorithm == "decision-tree":
        trees = (_export_classifier_tree(est),)
        return TreeEnsembleModel(algorithm, trees, fingerprint_cfg, hp, name=name)
    if algorithm in ("random-forest", "extra-trees"):
        trees = tuple(_export_classifier_tree(e) for e in est.estimators_)
        return TreeEnsembleModel(algorithm, trees, fingerprint_cfg, hp, name=name)

    trees = tuple(_export_regression_tree(e) for e in est.estimators_[:, 0])
    lr = float(est.learning_rate)
    # boosting starts from the log-odds of the training prior
    prior = float(y.mean())
    init = math.log(prior / (1.0 - prior))
    return TreeEnsembleModel(
        algorithm, trees, fingerprint_cfg, hp, aggregation="logistic", init=init, learning_rate=lr, name=name
    )


def evaluate(model: TreeEnsembleModel, test: BioassayDataset, X: np.ndarray | None = None) -> Metrics:
    """Accuracy at 0.5 and ROC-AUC (absent when the test set has one class)."""
    if not len(test):
        raise ValueError("test set is empty")
    scores = predict_matrix(model, X) if X is not None else predict_batch(model, list(test.molecules))
    return score_metrics(scores, test.labels)
