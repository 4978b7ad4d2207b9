"""Tree-ensemble classifiers as flat arrays: serialization and inference.

Every tree is stored as parallel node arrays ``feature``, ``threshold``,
``left``, ``right`` and ``value``. Internal nodes send a sample left when its
feature value is ``<= threshold``; leaves have ``left == right == -1`` and
carry ``value``.

Two aggregations exist:

* ``mean``: probability is the mean leaf value (class-1 fraction) over trees;
* ``logistic``: probability is ``1 / (1 + exp(-(init + learning_rate * sum)))``.

Both :func:`predict` and :func:`predict_batch` accumulate tree outputs in
tree order and apply the final transform with :mod:`math`, so the two paths
return identical floats.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import _kernels
from ..chem.mol import Molecule
from ..fingerprints import FingerprintConfig, fingerprint_matrix, morgan_fingerprint

FORMAT = "mtdd-qsar-model"
FORMAT_VERSION = 1
ALGORITHMS = ("decision-tree", "random-forest", "extra-trees", "gradient-boosting")


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Tree:
    feature: tuple[int, ...]
    threshold: tuple[float, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    value: tuple[float, ...]

    def __post_init__(self):
        n = len(self.feature)
        if n == 0 or any(len(a) != n for a in (self.threshold, self.left, self.right, self.value)):
            raise ModelFormatError("tree arrays must be non-empty and equally long")
        for i in range(n):
            lo, hi = self.left[i], self.right[i]
            if (lo == -1) != (hi == -1):
                raise ModelFormatError(f"node {i} has exactly one child")
            if lo != -1 and not (i < lo < n and i < hi < n):
                raise ModelFormatError(f"node {i} has out-of-range children")

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.left[node] == -1:
                best = max(best, d)
            else:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def leaf_value(self, bits: int) -> float:
        node = 0
        left, right, feat, thr = self.left, self.right, self.feature, self.threshold
        while left[node] != -1:
            x = (bits >> feat[node]) & 1
            node = left[node] if x <= thr[node] else right[node]
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": list(self.threshold),
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            tuple(int(v) for v in d["feature"]),
            tuple(float(v) for v in d["threshold"]),
            tuple(int(v) for v in d["left"]),
            tuple(int(v) for v in d["right"]),
            tuple(float(v) for v in d["value"]),
        )

    @classmethod
    def leaf(cls, value: float) -> Tree:
        return cls((-2,), (-2.0,), (-1,), (-1,), (float(value),))


@dataclass(frozen=True)
class TreeEnsembleModel:
    algorithm: str
    trees: tuple[Tree, ...]
    fingerprint_cfg: FingerprintConfig
    hyperparams: dict = field(default_factory=dict)
    aggregation: str = "mean"
    init: float = 0.0
    learning_rate: float = 1.0
    metrics: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ModelFormatError(f"unknown algorithm {self.algorithm!r}")
        if self.aggregation not in ("mean", "logistic"):
            raise ModelFormatError(f"unknown aggregation {self.aggregation!r}")
        if not self.trees:
            raise ModelFormatError("model has no trees")
        n_bits = self.fingerprint_cfg.n_bits
        for t in self.trees:
            if any(f >= n_bits for f, lo in zip(t.feature, t.left) if lo != -1):
                raise ModelFormatError("tree splits on a feature outside the fingerprint width")

    def with_metrics(self, metrics: dict) -> TreeEnsembleModel:
        return TreeEnsembleModel(
            self.algorithm,
            self.trees,
            self.fingerprint_cfg,
            self.hyperparams,
            self.aggregation,
            self.init,
            self.learning_rate,
            dict(metrics),
            self.name,
        )

    def finalize(self, acc: float) -> float:
        if self.aggregation == "mean":
            return acc / len(self.trees)
        margin = self.init + self.learning_rate * acc
        # stable logistic
        if margin >= 0:
            return 1.0 / (1.0 + math.exp(-margin))
        e = math.exp(margin)
        return e / (1.0 + e)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "name": self.name,
            "algorithm": self.algorithm,
            "hyperparams": self.hyperparams,
            "fingerprint": self.fingerprint_cfg.to_dict(),
            "aggregation": {"kind": self.aggregation, "init": self.init, "learning_rate": self.learning_rate},
            "metrics": self.metrics,
            "trees": [t.to_dict() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def from_dict(cls, d: dict) -> TreeEnsembleModel:
        if d.get("format") != FORMAT:
            raise ModelFormatError("not a QSAR model file")
        if d.get("version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model version {d.get('version')}")
        agg = d["aggregation"]
        return cls(
            algorithm=d["algorithm"],
            trees=tuple(Tree.from_dict(t) for t in d["trees"]),
            fingerprint_cfg=FingerprintConfig.from_dict(d["fingerprint"]),
            hyperparams=dict(d.get("hyperparams", {})),
            aggregation=agg["kind"],
            init=float(agg.get("init", 0.0)),
            learning_rate=float(agg.get("learning_rate", 1.0)),
            metrics=dict(d.get("metrics", {})),
            name=d.get("name", ""),
        )

    @classmethod
    def loads(cls, text: str) -> TreeEnsembleModel:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> TreeEnsembleModel:
        return cls.loads(Path(path).read_text())


def predict(model: TreeEnsembleModel, mol: Molecule) -> float:
    bits = morgan_fingerprint(mol, model.fingerprint_cfg).bits
    acc = 0.0
    for tree in model.trees:
        acc += tree.leaf_value(bits)
    return model.finalize(acc)


# ---------------------------------------------------------------------------
# batched inference


@dataclass(frozen=True)
class _Packed:
    """All trees concatenated into flat node tables.

    ``child[2 * node + x]`` is the node reached from ``node`` when the split
    feature has value ``x`` (features are binary); leaves point at themselves.
    """

    roots: np.ndarray
    feature: np.ndarray
    child: np.ndarray
    leaf: np.ndarray
    value: np.ndarray
    depth: int


_PACK_CACHE: dict[int, tuple[TreeEnsembleModel, _Packed]] = {}


def _pack(model: TreeEnsembleModel) -> _Packed:
    hit = _PACK_CACHE.get(id(model))
    if hit is not None and hit[0] is model:
        return hit[1]
    roots, feat, child, leaf, val = [], [], [], [], []
    off = 0
    for t in model.trees:
        roots.append(off)
        for i in range(t.n_nodes):
            if t.left[i] == -1:
                feat.append(0)
                child.extend((off + i, off + i))
                leaf.append(True)
            else:
                feat.append(t.feature[i])
                thr = t.threshold[i]
                child.extend(off + (t.left[i] if x <= thr else t.right[i]) for x in (0, 1))
                leaf.append(False)
            val.append(t.value[i])
        off += t.n_nodes
    idx = np.int32 if off < 2**31 else np.int64
    packed = _Packed(
        np.asarray(roots, dtype=idx),
        np.asarray(feat, dtype=idx),
        np.asarray(child, dtype=idx),
        np.asarray(leaf, dtype=bool),
        np.asarray(val, dtype=np.float64),
        max(t.depth() for t in model.trees),
    )
    if len(_PACK_CACHE) > 32:
        _PACK_CACHE.clear()
    _PACK_CACHE[id(model)] = (model, packed)
    return packed


def leaf_values(model: TreeEnsembleModel, X: np.ndarray, block: int = 1024) -> np.ndarray:
    """Leaf value reached by each row of ``X`` in each tree, shape ``(n, n_trees)``.

    Rows are processed in blocks; within a block all (row, tree) pairs advance
    one level per step until every pair sits on a leaf.
    """
    p = _pack(model)
    n, width = X.shape
    n_trees = len(p.roots)
    out = np.empty((n, n_trees), dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.uint8)
    if _kernels.AVAILABLE and n:
        return p.value[_kernels.traverse(p.feature, p.child, p.leaf, p.roots, X)]
    for start in range(0, n, block):
        xb = X[start : start + block].ravel()
        m = len(xb) // width if width else 0
        row_off = (np.arange(m, dtype=np.int64) * width)[:, None]
        node = np.broadcast_to(p.roots, (m, n_trees)).ravel().copy()
        base = np.broadcast_to(row_off, (m, n_trees)).ravel()
        active = np.arange(node.size)
        for _ in range(p.depth):
            cur = node[active]
            x = xb[base[active] + p.feature[cur]]
            nxt = p.child[2 * cur + x]
            node[active] = nxt
            active = active[~p.leaf[nxt]]
            if not active.size:
                break
        out[start : start + m] = p.value[node].reshape(m, n_trees)
    return out


def predict_matrix(model: TreeEnsembleModel, X: np.ndarray) -> list[float]:
    vals = leaf_values(model, X)
    acc = np.zeros(vals.shape[0], dtype=np.float64)
    # sequential accumulation in tree order, matching predict()
    for t in range(vals.shape[1]):
        acc += vals[:, t]
    return [model.finalize(float(a)) for a in acc]


def predict_batch(model: TreeEnsembleModel, mols: Sequence[Molecule]) -> list[float]:
    if not len(mols):
        return []
    return predict_matrix(model, fingerprint_matrix(mols, model.fingerprint_cfg))


def staged_probabilities(model: TreeEnsembleModel, X: np.ndarray) -> np.ndarray:
    """Probabilities after each tree, shape ``(n_trees, n)``."""
    vals = leaf_values(model, X)
    acc = np.zeros(vals.shape[0], dtype=np.float64)
    stages = []
    for t in range(vals.shape[1]):
        acc += vals[:, t]
        if model.aggregation == "mean":
            stages.append(acc / (t + 1))
        else:
            stages.append(1.0 / (1.0 + np.exp(-(model.init + model.learning_rate * acc))))
    return np.asarray(stages)
