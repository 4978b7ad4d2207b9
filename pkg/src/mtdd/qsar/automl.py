"""Random search over tree-ensemble algorithms and hyperparameters.

Search space:

* decision tree: max_depth 3..32, min_leaf 1..16
* random forest / extra trees: n_trees 32..512, max_depth 4..32,
  max_features in {sqrt, 0.1, 0.3}
* gradient boosting: rounds 50..500, max_depth 2..6, learning_rate 0.01..0.3

Candidates are drawn uniformly: first the algorithm, then each parameter.
The budget is wall-clock seconds, or a fixed candidate count for
reproducible runs. At least one candidate is always evaluated.
"""

from __future__ import annotations

import random
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from ..fingerprints import DEFAULT_CONFIG, FingerprintConfig
from .dataset import BioassayDataset
from .metrics import Metrics
from .model import ALGORITHMS, TreeEnsembleModel
from .train import evaluate, features, train_model

DEFAULT_TIME_BUDGET = 3600.0


@dataclass(frozen=True)
class AutoMLConfig:
    time_budget: float = DEFAULT_TIME_BUDGET
    search_seed: int = 0
    candidate_algorithms: tuple[str, ...] = ALGORITHMS
    selection_metric: str = "roc_auc"
    max_candidates: int | None = None
    n_jobs: int = 1
    fingerprint_cfg: FingerprintConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.max_candidates is not None and self.max_candidates < 1:
            raise ValueError("max_candidates must be at least 1")
        if not self.candidate_algorithms or any(a not in ALGORITHMS for a in self.candidate_algorithms):
            raise ValueError(f"candidate_algorithms must be a non-empty subset of {ALGORITHMS}")
        if self.selection_metric != "roc_auc":
            raise ValueError("only roc_auc selection is supported")


@dataclass(frozen=True)
class Candidate:
    algorithm: str
    hyperparams: dict
    seed: int


@dataclass
class SearchResult:
    model: TreeEnsembleModel
    best_index: int
    history: list[tuple[Candidate, Metrics]] = field(default_factory=list)


def sample_candidate(rng: random.Random, algorithms: Sequence[str]) -> Candidate:
    algo = rng.choice(list(algorithms))
    if algo == "decision-tree":
        hp = {"max_depth": rng.randint(3, 32), "min_leaf": rng.randint(1, 16)}
    elif algo in ("random-forest", "extra-trees"):
        hp = {
            "n_trees": rng.randint(32, 512),
            "max_depth": rng.randint(4, 32),
            "max_features": rng.choice(["sqrt", 0.1, 0.3]),
        }
    else:
        hp = {
            "rounds": rng.randint(50, 500),
            "max_depth": rng.randint(2, 6),
            "learning_rate": round(rng.uniform(0.01, 0.3), 6),
        }
    return Candidate(algo, hp, rng.randrange(2**31))


def _key(m: Metrics) -> tuple[float, float]:
    auc = m.roc_auc if m.roc_auc is not None else float("-inf")
    return (auc, m.accuracy)


def select_best(results: Sequence[Metrics]) -> int:
    """Index of the best metrics: roc_auc, then accuracy, then earliest."""
    best = 0
    for i in range(1, len(results)):
        if _key(results[i]) > _key(results[best]):
            best = i
    return best


def automl_search(dataset: BioassayDataset, split, cfg: AutoMLConfig = AutoMLConfig()) -> TreeEnsembleModel:
    """Best model of a random search; see :func:`run_search` for the full history."""
    return run_search(dataset, split, cfg).model


def run_search(
    dataset: BioassayDataset,
    split,
    cfg: AutoMLConfig = AutoMLConfig(),
    clock: Callable[[], float] = time.monotonic,
    candidates: Sequence[Candidate] | None = None,
) -> SearchResult:
    """Train candidates on ``split.train_indices``, score on ``split.test_indices``.

    ``candidates`` overrides random sampling with a fixed list (evaluated in
    order, still subject to the budget).
    """
    train = dataset.subset(split.train_indices)
    test = dataset.subset(split.test_indices)
    train.require_trainable()
    X_train = features(train, cfg.fingerprint_cfg)
    X_test = features(test, cfg.fingerprint_cfg)
    rng = random.Random(cfg.search_seed)
    start = clock()
    history: list[tuple[Candidate, Metrics]] = []
    models: list[TreeEnsembleModel] = []
    best = -1
    while True:
        i = len(history)
        if candidates is not None:
            if i >= len(candidates):
                break
            cand = candidates[i]
        else:
            cand = sample_candidate(rng, cfg.candidate_algorithms)
        model = train_model(
            train, cand.algorithm, cand.hyperparams, cand.seed, cfg.fingerprint_cfg, cfg.n_jobs, X=X_train
        )
        metrics = evaluate(model, test, X=X_test)
        history.append((cand, metrics))
        if best < 0 or _key(metrics) > _key(history[best][1]):
            best = i
            models = [model]
        if cfg.max_candidates is not None:
            if len(history) >= cfg.max_candidates:
                break
        elif clock() - start >= cfg.time_budget:
            break
    chosen = models[0].with_metrics(
        {
            **history[best][1].to_dict(),
            "split": "lo",
            "candidate_index": best,
            "candidates_evaluated": len(history),
            "seed": history[best][0].seed,
        }
    )
    return SearchResult(chosen, best, history)
