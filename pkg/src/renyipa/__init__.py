"""Renyi-entropy privacy amplification and decoupling bounds, evaluated numerically."""

__version__ = "0.1.0"

from .entropy import (  # noqa: E402
    NEG_INFINITY,
    OptimizerSettings,
    min_entropy_cc,
    renyi_cond_entropy_fixed,
    renyi_cond_entropy_opt,
    sandwiched_norm,
    von_neumann_cond,
)
from .qops import DensityOperator, make_rng  # noqa: E402
