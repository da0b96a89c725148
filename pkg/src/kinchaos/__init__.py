"""Toolkit for moderately interacting kinetic particle systems.

Simulates N-particle systems with mollified interactions driven by isotropic
alpha-stable noise, solves the limiting kinetic Fokker-Planck equation on a
phase-space grid, and measures convergence rates in mixed-integrability and
anisotropic Besov norms.
"""

from ._backend import HAVE_COMPILED
from .params import (
    DerivedRates,
    HypothesisReport,
    ModelParams,
    ParameterError,
    derive_rates,
    riesz_rate,
    validate_hypothesis,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED",
    "ModelParams",
    "DerivedRates",
    "HypothesisReport",
    "ParameterError",
    "derive_rates",
    "riesz_rate",
    "validate_hypothesis",
    "__version__",
]
