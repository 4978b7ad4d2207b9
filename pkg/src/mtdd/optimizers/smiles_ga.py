"""Grammar-genome SMILES genetic algorithm (mutation only)."""

from __future__ import annotations

import logging

import numpy as np

from ..chem import ChemError, parse_smiles, write_smiles
from . import grammar
from .base import (
    EncodingFailure,
    GAConfig,
    GenerationState,
    Oracle,
    PoolTooSmall,
    ScoringFn,
    evolve,
    initial_population,
    pool_items,
    unique_valid,
)

log = logging.getLogger(__name__)

MAX_TRIES = 10
SMILES_GA_PATIENCE = 50


def smiles_ga_optimize(scoring: ScoringFn, pool, cfg: GAConfig = GAConfig(patience=SMILES_GA_PATIENCE)) -> GenerationState:
    """Evolve grammar genomes; each child is one subtree mutation of a uniformly chosen parent.

    Pool molecules that the grammar cannot encode are skipped and counted.
    """
    rng = np.random.default_rng(cfg.seed)
    oracle = scoring if isinstance(scoring, Oracle) else Oracle(scoring, cfg.oracle_budget, cfg.threads)
    genomes: dict[str, list[int]] = {}
    usable = []
    skipped = 0
    for smi, mol in unique_valid(pool_items(pool)):
        try:
            genomes[smi] = grammar.encode(smi)
        except EncodingFailure:
            skipped += 1
            continue
        usable.append(smi)
    if skipped:
        log.info("skipped %d pool molecules outside the SMILES grammar", skipped)
    if len(usable) < cfg.population_size:
        raise PoolTooSmall(f"only {len(usable)} encodable pool molecules, need {cfg.population_size}")
    population = initial_population(oracle, usable, cfg)

    def make_children(pop, rng):
        children = []
        for _ in range(cfg.offspring_size):
            parent = pop[rng.integers(len(pop))][0]
            for _ in range(MAX_TRIES):
                genome = grammar.mutate_genome(genomes[parent], rng)
                try:
                    mol = parse_smiles(grammar.decode(genome))
                except (ChemError, ValueError):
                    continue
                if len(mol.fragments) != 1 or mol.heavy_atom_count > cfg.max_heavy_atoms:
                    continue
                smi = write_smiles(mol)
                genomes.setdefault(smi, genome)
                children.append((smi, mol))
                break
        return children

    state = evolve(oracle, population, cfg, rng, make_children)
    state.genomes = {smi: genomes[smi] for smi in state.smiles}
    state.skipped = skipped
    return state
