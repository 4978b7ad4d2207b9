"""Physicochemical descriptors and CNS MPO desirability scoring."""

from .mpo import CNS_MPO_FUNCTIONS, DesirabilityFunction, cns_mpo_components, cns_mpo_score
from .patterns import ContributionTable, PatternError, compile_pattern
from .physchem import (
    PhyschemProfile,
    clogd,
    compute_profile,
    crippen_logp,
    hba,
    hbd,
    pka_basic,
    tpsa,
)

__all__ = [
    "CNS_MPO_FUNCTIONS",
    "ContributionTable",
    "DesirabilityFunction",
    "PatternError",
    "PhyschemProfile",
    "clogd",
    "cns_mpo_components",
    "cns_mpo_score",
    "compile_pattern",
    "compute_profile",
    "crippen_logp",
    "hba",
    "hbd",
    "pka_basic",
    "tpsa",
]
