"""Kac-Rice correlation functions and their integrals."""

from .context import KernelContext
from .integrate import (VarianceResult, VarianceSettings, expected_count, variance_count,
                        variance_json)
from .pairs import (PairStats, cross_kernel, cross_partials, pair_stats, pair_stats_literal,
                    pseudo_hyperbolic)
from .quad import QuadParams
from .rho import InnerQuad, Rho2Result, rho1, rho2
from .scheme import RegionScheme, domination_margin

__all__ = [
    "KernelContext", "PairStats", "pair_stats", "pair_stats_literal", "cross_kernel",
    "cross_partials", "pseudo_hyperbolic", "rho1", "rho2", "InnerQuad", "Rho2Result",
    "expected_count", "variance_count", "variance_json", "VarianceSettings", "VarianceResult",
    "QuadParams", "RegionScheme", "domination_margin",
]
