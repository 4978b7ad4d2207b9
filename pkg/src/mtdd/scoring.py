"""Disease MPO scoring functions, set evaluation and benchmark reports."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .chem import ChemError, Molecule, parse_smiles, write_smiles
from .descriptors import cns_mpo_score, compute_profile
from .fingerprints import fingerprint_matrix
from .qsar.model import TreeEnsembleModel, predict_matrix
from .sascore import FragmentScoreTable, sa_score

SPEC_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1
AGGREGATIONS = ("guacamol_top_1_10_100", "mean_top_100")
COMPONENTS = ("target_response", "bbb", "cns_mpo", "sa")
TOP_K = 100


class SpecError(ValueError):
    pass


class EmptyInput(ValueError):
    pass


def geometric_mean(values: Sequence[float]) -> float:
    """Geometric mean; any zero gives exactly zero."""
    if not values:
        raise ValueError("geometric mean of nothing")
    if any(v <= 0.0 for v in values):
        return 0.0
    # log space: a plain product underflows for many small components
    return math.exp(math.fsum(math.log(v) for v in values) / len(values))


# ---------------------------------------------------------------------------
# benchmark specification


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    target_models: tuple[TreeEnsembleModel, ...]
    bbb_model: TreeEnsembleModel | None = None
    use_cns_mpo: bool = True
    use_sa_score: bool = True
    sa_table: FragmentScoreTable | None = None
    aggregation: str = "guacamol_top_1_10_100"
    paths: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.target_models:
            raise SpecError("a benchmark needs at least one target model")
        if self.aggregation not in AGGREGATIONS:
            raise SpecError(f"aggregation must be one of {AGGREGATIONS}")
        if self.use_sa_score and self.sa_table is None:
            raise SpecError("SA scoring enabled but no fragment table given")
        cfgs = {m.fingerprint_cfg for m in self.models}
        if len(cfgs) != 1:
            raise SpecError("all models in a benchmark must share one fingerprint configuration")

    @property
    def models(self) -> list[TreeEnsembleModel]:
        return list(self.target_models) + ([self.bbb_model] if self.bbb_model is not None else [])

    @property
    def enabled(self) -> tuple[str, ...]:
        out = ["target_response"]
        if self.bbb_model is not None:
            out.append("bbb")
        if self.use_cns_mpo:
            out.append("cns_mpo")
        if self.use_sa_score:
            out.append("sa")
        return tuple(out)

    def to_dict(self) -> dict:
        if not self.paths:
            raise SpecError("spec was built in memory; no artifact paths to write")
        return {
            "schema_version": SPEC_SCHEMA_VERSION,
            "name": self.name,
            "target_models": list(self.paths["target_models"]),
            "bbb_model": self.paths.get("bbb_model"),
            "use_cns_mpo": self.use_cns_mpo,
            "use_sa_score": self.use_sa_score,
            "sa_table": self.paths.get("sa_table"),
            "aggregation": self.aggregation,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def load_spec(path: str | Path) -> BenchmarkSpec:
    """Load a benchmark spec; artifact paths are relative to the spec file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read benchmark spec {path}: {exc}") from exc
    if data.get("schema_version") != SPEC_SCHEMA_VERSION:
        raise SpecError(f"unsupported spec schema version {data.get('schema_version')}")
    base = path.parent

    def resolve(p):
        return p if Path(p).is_absolute() else str(base / p)

    try:
        targets = tuple(TreeEnsembleModel.load(resolve(p)) for p in data["target_models"])
        bbb = TreeEnsembleModel.load(resolve(data["bbb_model"])) if data.get("bbb_model") else None
        table = FragmentScoreTable.load(resolve(data["sa_table"])) if data.get("sa_table") else None
    except (OSError, ValueError, KeyError) as exc:
        raise SpecError(f"cannot load artifacts for {path}: {exc}") from exc
    return BenchmarkSpec(
        name=data["name"],
        target_models=targets,
        bbb_model=bbb,
        use_cns_mpo=bool(data.get("use_cns_mpo", True)),
        use_sa_score=bool(data.get("use_sa_score", True)),
        sa_table=table,
        aggregation=data.get("aggregation", "guacamol_top_1_10_100"),
        paths={
            "target_models": list(data["target_models"]),
            "bbb_model": data.get("bbb_model"),
            "sa_table": data.get("sa_table"),
        },
    )


# ---------------------------------------------------------------------------
# per-molecule scores


@dataclass(frozen=True)
class MoleculeScore:
    molecule: str
    target_response: float
    bbb: float | None
    cns_mpo: float | None
    sa: float | None
    final: float

    def components(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in COMPONENTS if getattr(self, k) is not None}

    def to_dict(self) -> dict:
        return asdict(self)


def target_response(mols: Sequence[Molecule], target_models: Sequence[TreeEnsembleModel]) -> list[float]:
    """Per molecule, the geometric mean of every target model's probability."""
    if not target_models:
        raise SpecError("target_response needs at least one model")
    if not mols:
        return []
    cache: dict = {}
    preds = []
    for m in target_models:
        X = cache.get(m.fingerprint_cfg)
        if X is None:
            X = cache[m.fingerprint_cfg] = fingerprint_matrix(list(mols), m.fingerprint_cfg)
        preds.append(predict_matrix(m, X))
    return [geometric_mean(col) for col in zip(*preds)]


def _zero_score(spec: BenchmarkSpec, text: str) -> MoleculeScore:
    on = spec.enabled
    return MoleculeScore(
        text,
        0.0,
        0.0 if "bbb" in on else None,
        0.0 if "cns_mpo" in on else None,
        0.0 if "sa" in on else None,
        0.0,
    )


def _score_valid(mols: Sequence[Molecule], spec: BenchmarkSpec) -> list[MoleculeScore]:
    if not mols:
        return []
    X = fingerprint_matrix(list(mols), spec.target_models[0].fingerprint_cfg)
    preds = [predict_matrix(m, X) for m in spec.target_models]
    tr = [geometric_mean(col) for col in zip(*preds)]
    bbb = predict_matrix(spec.bbb_model, X) if spec.bbb_model is not None else [None] * len(mols)
    out = []
    for i, mol in enumerate(mols):
        cns = cns_mpo_score(compute_profile(mol)) if spec.use_cns_mpo else None
        sa = sa_score(mol, spec.sa_table) if spec.use_sa_score else None
        parts = [v for v in (tr[i], bbb[i], cns, sa) if v is not None]
        out.append(MoleculeScore(write_smiles(mol), tr[i], bbb[i], cns, sa, geometric_mean(parts)))
    return out


def score_molecules(
    items: Sequence[Molecule | str], spec: BenchmarkSpec, threads: int = 1, chunk: int = 256
) -> list[MoleculeScore]:
    """Score molecules or SMILES; unparseable input scores zero everywhere.

    With ``threads > 1`` chunks are scored concurrently and reassembled in
    input order, so results do not depend on the thread count.
    """
    mols: list[Molecule | None] = []
    texts: list[str] = []
    for it in items:
        if isinstance(it, Molecule):
            mols.append(it)
            texts.append("")
        else:
            try:
                mols.append(parse_smiles(it))
            except ChemError:
                mols.append(None)
            texts.append(it)
    valid = [i for i, m in enumerate(mols) if m is not None and m.atoms]
    chunks = [valid[s : s + chunk] for s in range(0, len(valid), chunk)]

    def run(idx):
        return _score_valid([mols[i] for i in idx], spec)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    out: list[MoleculeScore | None] = [None] * len(items)
    for idx, res in zip(chunks, results):
        for i, s in zip(idx, res):
            out[i] = s
    return [s if s is not None else _zero_score(spec, texts[i]) for i, s in enumerate(out)]


def score_molecule(mol: Molecule | str, spec: BenchmarkSpec) -> MoleculeScore:
    return score_molecules([mol], spec)[0]


class Scorer:
    """Callable scoring function with an exact invocation counter.

    ``scorer(mols)`` returns the final score of each molecule; every
    molecule scored counts as one oracle call.
    """

    def __init__(self, fn: Callable[[Sequence[Molecule]], list[float]] | BenchmarkSpec, threads: int = 1):
        if isinstance(fn, BenchmarkSpec):
            spec = fn
            self.spec = spec
            self._fn = lambda mols: [s.final for s in score_molecules(mols, spec, threads)]
        else:
            self.spec = None
            self._fn = fn
        self.calls = 0

    def __call__(self, mols: Sequence[Molecule]) -> list[float]:
        if not mols:
            return []
        self.calls += len(mols)
        return list(self._fn(mols))


# ---------------------------------------------------------------------------
# set evaluation and reports


@dataclass(frozen=True)
class ComponentStats:
    mean: float
    std: float


@dataclass
class BenchmarkReport:
    benchmark: str
    method: str
    aggregation: str
    score: float
    n_scored: int
    components: dict[str, ComponentStats]
    top: list[MoleculeScore]

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "benchmark": self.benchmark,
            "method": self.method,
            "aggregation": self.aggregation,
            "score": self.score,
            "n_scored": self.n_scored,
            "n_top": len(self.top),
            "std_convention": "population",
            "components": {k: asdict(v) for k, v in self.components.items()},
            "top": [s.to_dict() for s in self.top],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "smiles", *COMPONENTS, "final"])
            for rank, s in enumerate(self.top, 1):
                w.writerow([rank, s.molecule, *("" if getattr(s, c) is None else getattr(s, c) for c in COMPONENTS), s.final])


REPORT_REQUIRED_KEYS = {
    "schema_version": int,
    "benchmark": str,
    "method": str,
    "aggregation": str,
    "score": float,
    "n_scored": int,
    "n_top": int,
    "components": dict,
    "top": list,
}


def validate_report(data: dict) -> list[str]:
    """Problems with a report dictionary; empty when it is well formed."""
    problems = []
    for key, typ in REPORT_REQUIRED_KEYS.items():
        if key not in data:
            problems.append(f"missing {key}")
        elif typ is float and not isinstance(data[key], (int, float)):
            problems.append(f"{key} is not a number")
        elif typ is not float and not isinstance(data[key], typ):
            problems.append(f"{key} is not {typ.__name__}")
    if problems:
        return problems
    if data["schema_version"] != REPORT_SCHEMA_VERSION:
        problems.append("unknown schema_version")
    if data["aggregation"] not in AGGREGATIONS:
        problems.append("unknown aggregation")
    if not 0.0 <= data["score"] <= 1.0:
        problems.append("score outside [0, 1]")
    if data["n_top"] != len(data["top"]) or data["n_top"] != min(TOP_K, data["n_scored"]):
        problems.append("n_top inconsistent with top list")
    for i, row in enumerate(data["top"]):
        for k in ("molecule", "final"):
            if k not in row:
                problems.append(f"top[{i}] missing {k}")
        for k in (*COMPONENTS, "final"):
            v = row.get(k)
            if v is not None and not 0.0 <= v <= 1.0:
                problems.append(f"top[{i}].{k} outside [0, 1]")
    for name, st in data["components"].items():
        if set(st) != {"mean", "std"}:
            problems.append(f"component {name} needs mean and std")
    return problems


def _mean_std(values: Sequence[float]) -> ComponentStats:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return ComponentStats(mean, math.sqrt(var))


def aggregate_scores(finals_desc: Sequence[float], aggregation: str) -> float:
    """Aggregate final scores already sorted in descending order."""
    if not finals_desc:
        raise EmptyInput("nothing to aggregate")
    top100 = finals_desc[:TOP_K]
    if aggregation == "mean_top_100":
        return sum(top100) / len(top100)
    if aggregation == "guacamol_top_1_10_100":
        means = [sum(finals_desc[:k]) / len(finals_desc[:k]) for k in (1, 10, TOP_K)]
        return sum(means) / 3
    raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


def report_from_scores(
    scores: Sequence[MoleculeScore], benchmark: str, method: str, aggregation: str, k: int = TOP_K
) -> BenchmarkReport:
    """Deduplicate, rank (final desc, SMILES asc) and summarize the top ``k``."""
    if not scores:
        raise EmptyInput("no molecules to evaluate")
    uniq: dict[str, MoleculeScore] = {}
    for s in scores:
        uniq.setdefault(s.molecule, s)
    ranked = sorted(uniq.values(), key=lambda s: (-s.final, s.molecule))
    top = ranked[: min(k, len(ranked))]
    comps = {}
    for c in COMPONENTS:
        vals = [getattr(s, c) for s in top]
        if all(v is not None for v in vals):
            comps[c] = _mean_std(vals)
    comps["final"] = _mean_std([s.final for s in top])
    agg = aggregate_scores([s.final for s in top], aggregation)
    return BenchmarkReport(benchmark, method, aggregation, agg, len(ranked), comps, top)


def evaluate_set(
    mols: Sequence[Molecule | str], spec: BenchmarkSpec, method_name: str, threads: int = 1
) -> BenchmarkReport:
    if not mols:
        raise EmptyInput("no molecules to evaluate")
    scores = score_molecules(list(mols), spec, threads)
    return report_from_scores(scores, spec.name, method_name, spec.aggregation)


def best_of_dataset(library, spec: BenchmarkSpec, k: int = TOP_K, threads: int = 1) -> BenchmarkReport:
    """Score every library entry and report over the best ``k``."""
    smiles = library.smiles if hasattr(library, "smiles") else list(library)
    if not smiles:
        raise EmptyInput("library is empty")
    scores = score_molecules(list(smiles), spec, threads)
    return report_from_scores(scores, spec.name, "best-of-dataset", spec.aggregation, k)
