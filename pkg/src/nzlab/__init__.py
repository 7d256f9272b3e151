"""Numerical laboratory for lattice zeta functions and Fokker-Planck diagnostics."""

from .errors import (BlowUpError, ConsistencyError, ConstructionError, DomainError, EvaluationError,
                     NZLError, PoleError, ResourceError)
from .lattice import GramMatrix, gram_from_tau, is_semistable
from .moduli import ModuliGrid, build_grid, rank1_grid
from .theta import big_theta, theta
from .zeta import ZetaValue, ZeroRecord, find_zeros, zeta_integral, zeta_rank1_reference

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "ConsistencyError", "ConstructionError", "DomainError", "EvaluationError",
    "NZLError", "PoleError", "ResourceError", "GramMatrix", "gram_from_tau", "is_semistable",
    "ModuliGrid", "build_grid", "rank1_grid", "big_theta", "theta", "ZetaValue", "ZeroRecord",
    "find_zeros", "zeta_integral", "zeta_rank1_reference",
]
