"""Disease target selection from drug annotations.

For one condition, targets are counted in pairs over the drugs that carry
the condition, the pair counts are scaled by their maximum, and a greedy
procedure grows a target set from the strongest pair.
"""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

AGGREGATIONS = ("mean", "min", "max")
DEFAULT_THRESHOLD = 0.7


class NoAnnotationsForCondition(ValueError):
    pass


@dataclass(frozen=True)
class DrugAnnotation:
    drug_id: str
    condition: str
    targets: frozenset[str]

    def to_dict(self) -> dict:
        return {"drug_id": self.drug_id, "condition": self.condition, "targets": sorted(self.targets)}


def normalize_condition(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch.isalnum())


def synonym_lookup(synonyms: Mapping[str, Iterable[str]]) -> dict[str, str]:
    """Alias -> canonical name, from ``{canonical: [aliases]}``."""
    lookup = {}
    for canon, aliases in synonyms.items():
        lookup[canon] = canon
        for alias in aliases:
            if lookup.get(alias, canon) != canon:
                raise ValueError(f"alias {alias!r} maps to two canonical names")
            lookup[alias] = canon
    return lookup


def apply_synonyms(
    annotations: Iterable[DrugAnnotation], synonyms: Mapping[str, Iterable[str]]
) -> list[DrugAnnotation]:
    lookup = synonym_lookup(synonyms)
    return [
        DrugAnnotation(a.drug_id, a.condition, frozenset(lookup.get(t, t) for t in a.targets))
        for a in annotations
    ]


def load_annotations(path: str | Path) -> list[DrugAnnotation]:
    """Read ``[{drug_id, condition, targets: [...]}, ...]`` JSON.

    The file may instead be an object ``{"annotations": [...], "synonyms":
    {canonical: [aliases]}}``, in which case the synonyms are applied.
    """
    data = json.loads(Path(path).read_text())
    synonyms = {}
    if isinstance(data, dict):
        synonyms = data.get("synonyms", {})
        data = data["annotations"]
    anns = [
        DrugAnnotation(str(d["drug_id"]), str(d["condition"]), frozenset(str(t) for t in d["targets"]))
        for d in data
    ]
    return apply_synonyms(anns, synonyms) if synonyms else anns


def load_synonyms(path: str | Path) -> dict[str, list[str]]:
    return json.loads(Path(path).read_text())


@dataclass(frozen=True)
class CooccurrenceMatrix:
    target_names: tuple[str, ...]
    counts: np.ndarray
    occurrences: tuple[int, ...]

    @property
    def normalized(self) -> np.ndarray:
        off = self.counts.astype(np.float64)
        np.fill_diagonal(off, 0.0)
        top = off.max() if off.size else 0.0
        return off / top if top > 0 else off

    def index(self, name: str) -> int:
        return self.target_names.index(name)


def build_cooccurrence(annotations: Iterable[DrugAnnotation], condition: str) -> CooccurrenceMatrix:
    key = normalize_condition(condition)
    rows = [a for a in annotations if normalize_condition(a.condition) == key and a.targets]
    if not rows:
        raise NoAnnotationsForCondition(f"no annotations for condition {condition!r}")
    names = tuple(sorted(set().union(*(a.targets for a in rows))))
    pos = {t: i for i, t in enumerate(names)}
    counts = np.zeros((len(names), len(names)), dtype=np.int64)
    occ: Counter = Counter()
    for a in rows:
        occ.update(a.targets)
        for t1, t2 in combinations(sorted(a.targets), 2):
            i, j = pos[t1], pos[t2]
            counts[i, j] += 1
            counts[j, i] += 1
    return CooccurrenceMatrix(names, counts, tuple(occ[t] for t in names))


def _aggregate(values: np.ndarray, how: str) -> float:
    if how == "mean":
        return float(values.mean())
    if how == "min":
        return float(values.min())
    if how == "max":
        return float(values.max())
    raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


def greedy_select(
    matrix: CooccurrenceMatrix, threshold: float = DEFAULT_THRESHOLD, aggregation: str = "mean"
) -> list[str]:
    """Grow a target set from the strongest co-occurring pair.

    A candidate joins while its aggregated normalized co-occurrence with the
    selected targets is at least ``threshold``. Ties go to the
    lexicographically smaller name. With no co-occurring pair at all the
    single most frequent target is returned.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
    names = matrix.target_names
    norm = matrix.normalized
    n = len(names)
    if n < 2 or not (norm > 0).any():
        best = min(range(n), key=lambda i: (-matrix.occurrences[i], names[i]))
        return [names[best]]
    # names are sorted, so index order is lexicographic order
    i0, j0 = min(
        ((i, j) for i in range(n) for j in range(i + 1, n)),
        key=lambda ij: (-norm[ij], ij),
    )
    selected = [i0, j0]
    while len(selected) < n:
        rest = [k for k in range(n) if k not in selected]
        scored = [(_aggregate(norm[k, selected], aggregation), k) for k in rest]
        score, k = min(scored, key=lambda sk: (-sk[0], sk[1]))
        if score < threshold:
            break
        selected.append(k)
    return [names[k] for k in selected]


def select_targets(
    annotations: Iterable[DrugAnnotation],
    condition: str,
    threshold: float = DEFAULT_THRESHOLD,
    aggregation: str = "mean",
    synonyms: Mapping[str, Iterable[str]] | None = None,
) -> list[str]:
    anns = list(annotations)
    if synonyms:
        anns = apply_synonyms(anns, synonyms)
    return greedy_select(build_cooccurrence(anns, condition), threshold, aggregation)
