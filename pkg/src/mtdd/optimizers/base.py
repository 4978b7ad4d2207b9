"""Shared optimizer plumbing: configuration, state, oracle accounting."""

from __future__ import annotations

import json
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..chem import ChemError, Molecule, parse_smiles, write_smiles

log = logging.getLogger(__name__)

ScoringFn = Callable[[Sequence[Molecule]], Sequence[float]]


class PoolTooSmall(ValueError):
    pass


class EncodingFailure(ValueError):
    pass


@dataclass(frozen=True)
class GAConfig:
    generations: int = 1000
    population_size: int = 100
    offspring_size: int = 200
    mutation_rate: float = 0.01
    patience: int = 5
    seed: int = 0
    oracle_budget: int | None = None
    threads: int = 1
    max_heavy_atoms: int = 60
    selection: str = "proportional"
    extended_mutations: bool = False

    def __post_init__(self):
        if self.population_size < 1 or self.offspring_size < 1:
            raise ValueError("population_size and offspring_size must be at least 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.oracle_budget is not None and self.oracle_budget < 1:
            raise ValueError("oracle_budget must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.selection not in ("proportional", "uniform"):
            raise ValueError("selection must be 'proportional' or 'uniform'")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TraceRow:
    generation: int
    best: float
    mean: float
    calls: int
    population: int
    children: int


@dataclass
class GenerationState:
    """Optimizer state after the last completed generation.

    ``population`` is sorted by score descending, ties by SMILES.
    """

    population: list[tuple[Molecule, float]]
    generation_index: int
    best_so_far: tuple[Molecule, float]
    stagnation_counter: int
    rng_state: dict
    trace: list[TraceRow] = field(default_factory=list)
    oracle_calls: int = 0
    stop_reason: str = ""
    genomes: dict[str, list[int]] | None = None
    skipped: int = 0

    @property
    def smiles(self) -> list[str]:
        return [write_smiles(m) for m, _ in self.population]

    def summary(self) -> dict:
        return {
            "generation_index": self.generation_index,
            "best_so_far": [write_smiles(self.best_so_far[0]), self.best_so_far[1]],
            "stagnation_counter": self.stagnation_counter,
            "oracle_calls": self.oracle_calls,
            "stop_reason": self.stop_reason,
            "population": [[write_smiles(m), s] for m, s in self.population],
        }

    def trace_json(self) -> str:
        return json.dumps([asdict(r) for r in self.trace], indent=1)

    def trace_tsv(self) -> str:
        lines = ["generation\tbest\tmean\tcalls\tpopulation\tchildren"]
        for r in self.trace:
            lines.append(f"{r.generation}\t{r.best!r}\t{r.mean!r}\t{r.calls}\t{r.population}\t{r.children}")
        return "\n".join(lines) + "\n"


class Oracle:
    """Scoring callback wrapper: caches by canonical SMILES and counts calls.

    A call is one molecule submitted to the callback; cached molecules are
    free. Results come back in submission order whatever ``threads`` is.
    """

    def __init__(self, fn: ScoringFn, budget: int | None = None, threads: int = 1, chunk: int = 64):
        self.fn = fn
        self.budget = budget
        self.threads = threads
        self.chunk = chunk
        self.calls = 0
        self.cache: dict[str, float] = {}
        self.scored: list[str] = []

    @property
    def remaining(self) -> int | None:
        return None if self.budget is None else self.budget - self.calls

    def _run(self, mols: list[Molecule]) -> list[float]:
        parts = [mols[i : i + self.chunk] for i in range(0, len(mols), self.chunk)]
        if self.threads > 1 and len(parts) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(lambda p: list(self.fn(p)), parts))
        else:
            results = [list(self.fn(p)) for p in parts]
        out = [v for r in results for v in r]
        if len(out) != len(mols):
            raise RuntimeError("scoring callback returned the wrong number of scores")
        return [float(v) for v in out]

    def score(self, items: Sequence[tuple[str, Molecule]]) -> list[float | None]:
        """Scores for ``(smiles, mol)`` pairs; ``None`` where the budget ran out."""
        new: dict[str, Molecule] = {}
        for smi, mol in items:
            if smi not in self.cache and smi not in new:
                new[smi] = mol
        todo = list(new.items())
        if self.budget is not None:
            todo = todo[: max(0, self.remaining)]
        if todo:
            values = self._run([m for _, m in todo])
            self.calls += len(todo)
            for (smi, _), v in zip(todo, values):
                self.cache[smi] = v
                self.scored.append(smi)
        return [self.cache.get(smi) for smi, _ in items]


def rank(items) -> list:
    """Sort ``(smiles, mol, score)`` by score descending, SMILES ascending."""
    return sorted(items, key=lambda t: (-t[2], t[0]))


def unique_valid(mols: Sequence[Molecule | str]) -> list[tuple[str, Molecule]]:
    """Canonical, de-duplicated ``(smiles, mol)`` pairs; unparseable input is skipped."""
    out, seen = [], set()
    for m in mols:
        try:
            mol = parse_smiles(m) if isinstance(m, str) else m
        except ChemError:
            continue
        if not mol.atoms:
            continue
        smi = write_smiles(mol)
        if smi not in seen:
            seen.add(smi)
            out.append((smi, mol))
    return out


def pool_items(pool) -> list:
    if hasattr(pool, "entries"):
        return [e.smiles for e in pool.entries]
    return list(pool)


def initial_population(
    oracle: Oracle, pool, cfg: GAConfig
) -> list[tuple[str, Molecule, float]]:
    items = unique_valid(pool_items(pool))
    if len(items) < cfg.population_size:
        raise PoolTooSmall(f"pool has {len(items)} usable molecules, need {cfg.population_size}")
    scores = oracle.score(items)
    scored = [(s, m, v) for (s, m), v in zip(items, scores) if v is not None]
    if not scored:
        raise PoolTooSmall("oracle budget too small to score any pool molecule")
    return rank(scored)[: cfg.population_size]


def make_state(population, generation, best, stagnation, rng, trace, oracle, reason) -> GenerationState:
    return GenerationState(
        population=[(m, v) for _, m, v in population],
        generation_index=generation,
        best_so_far=(best[1], best[2]),
        stagnation_counter=stagnation,
        rng_state=rng.bit_generator.state,
        trace=trace,
        oracle_calls=oracle.calls,
        stop_reason=reason,
    )


def evolve(
    oracle: Oracle,
    population: list,
    cfg: GAConfig,
    rng: np.random.Generator,
    make_children: Callable[[list, np.random.Generator], list[tuple[str, Molecule]]],
) -> GenerationState:
    """Generic elitist loop shared by the evolutionary optimizers.

    ``make_children(population, rng)`` returns candidate ``(smiles, mol)``
    pairs; they are scored in order and the best ``population_size`` of
    parents and children survive.
    """
    best = population[0]
    trace = [_row(0, population, oracle.calls, 0)]
    stagnation = 0
    reason = "generations"
    gen = 0
    for gen in range(1, cfg.generations + 1):
        if oracle.remaining is not None and oracle.remaining <= 0:
            gen -= 1
            reason = "oracle_budget"
            break
        children = make_children(population, rng)
        scores = oracle.score(children)
        scored = [(s, m, v) for (s, m), v in zip(children, scores) if v is not None]
        seen = {p[0] for p in population}
        pool = list(population)
        for c in scored:
            if c[0] not in seen:
                seen.add(c[0])
                pool.append(c)
        population = rank(pool)[: cfg.population_size]
        if population[0][2] > best[2]:
            best = population[0]
            stagnation = 0
        else:
            stagnation += 1
        trace.append(_row(gen, population, oracle.calls, len(scored)))
        if stagnation >= cfg.patience:
            reason = "patience"
            break
    else:
        gen = cfg.generations
    if oracle.remaining is not None and oracle.remaining <= 0:
        reason = "oracle_budget"
    return make_state(population, gen, best, stagnation, rng, trace, oracle, reason)


def _row(gen: int, population: list, calls: int, children: int) -> TraceRow:
    vals = [p[2] for p in population]
    return TraceRow(gen, vals[0], sum(vals) / len(vals), calls, len(vals), children)


def nitrogen_score(mols: Sequence[Molecule]) -> list[float]:
    """Toy objective: ``n / (n + 10)`` for ``n`` nitrogen atoms."""
    out = []
    for m in mols:
        n = sum(1 for a in m.atoms if a.element == "N")
        out.append(n / (n + 10.0))
    return out
