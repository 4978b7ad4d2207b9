"""Goal-directed molecule optimizers sharing one interface:
``optimizer(scoring, pool, GAConfig) -> GenerationState``."""

from .base import (
    EncodingFailure,
    GAConfig,
    GenerationState,
    Oracle,
    PoolTooSmall,
    TraceRow,
    nitrogen_score,
)
from .graph_ga import crossover, graph_ga_optimize, mutate
from .grammar import decode, encode, mutate_genome
from .screening import screening_baseline
from .smiles_ga import SMILES_GA_PATIENCE, smiles_ga_optimize

OPTIMIZERS = {
    "graph-ga": graph_ga_optimize,
    "smiles-ga": smiles_ga_optimize,
    "screening": screening_baseline,
}

__all__ = [
    "EncodingFailure",
    "GAConfig",
    "GenerationState",
    "OPTIMIZERS",
    "Oracle",
    "PoolTooSmall",
    "SMILES_GA_PATIENCE",
    "TraceRow",
    "crossover",
    "decode",
    "encode",
    "graph_ga_optimize",
    "mutate",
    "mutate_genome",
    "nitrogen_score",
    "screening_baseline",
    "smiles_ga_optimize",
]
