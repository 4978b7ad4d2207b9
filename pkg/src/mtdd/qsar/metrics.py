"""Classification metrics: accuracy and ROC-AUC."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np


class SingleClassTestSet(ValueError):
    pass


def accuracy(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> float:
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    if not len(labels):
        raise ValueError("accuracy of an empty set")
    hits = sum(1 for s, y in zip(scores, labels) if (s >= threshold) == (y == 1))
    return hits / len(labels)


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outscores a random negative; ties count 0.5.

    Computed from midranks (Mann-Whitney U), which equals pairwise counting.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTestSet("ROC-AUC needs both classes")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(len(s), dtype=np.float64)
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    roc_auc: float | None
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def score_metrics(scores: Sequence[float], labels: Sequence[int]) -> Metrics:
    try:
        auc = roc_auc(scores, labels)
    except SingleClassTestSet:
        auc = None
    return Metrics(accuracy(scores, labels), auc, len(labels))
