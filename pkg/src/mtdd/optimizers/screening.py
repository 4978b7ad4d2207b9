"""Random-screening baseline: score library molecules, keep the best, no variation."""

from __future__ import annotations

import numpy as np

from .base import GAConfig, GenerationState, Oracle, ScoringFn, TraceRow, make_state, pool_items, rank, unique_valid


def screening_baseline(scoring: ScoringFn, pool, cfg: GAConfig = GAConfig()) -> GenerationState:
    """Score the pool (or a seeded subsample of ``oracle_budget`` molecules) and keep the top."""
    rng = np.random.default_rng(cfg.seed)
    oracle = scoring if isinstance(scoring, Oracle) else Oracle(scoring, cfg.oracle_budget, cfg.threads)
    items = unique_valid(pool_items(pool))
    if not items:
        raise ValueError("screening needs a non-empty pool")
    if cfg.oracle_budget is not None and cfg.oracle_budget < len(items):
        pick = np.sort(rng.choice(len(items), size=cfg.oracle_budget, replace=False))
        items = [items[i] for i in pick]
    scores = oracle.score(items)
    population = rank([(s, m, v) for (s, m), v in zip(items, scores) if v is not None])[: cfg.population_size]
    vals = [p[2] for p in population]

    trace = [TraceRow(0, vals[0], sum(vals) / len(vals), oracle.calls, len(vals), 0)]
    return make_state(population, 0, population[0], 0, rng, trace, oracle, "screened")
