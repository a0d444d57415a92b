"""Weighted equilibrium measures on the unit circle."""

from . import examples
from .solver import (
    ArcSet,
    EquilibriumError,
    EquilibriumSolution,
    PolynomialWeight,
    ProblemConfig,
    SampledField,
    SolverOptions,
    Tolerances,
    TrigExponentialWeight,
    full_report,
    run_oracle,
    verify_solution,
)

__all__ = [
    "ArcSet",
    "EquilibriumError",
    "EquilibriumSolution",
    "PolynomialWeight",
    "ProblemConfig",
    "SampledField",
    "SolverOptions",
    "Tolerances",
    "TrigExponentialWeight",
    "examples",
    "full_report",
    "run_oracle",
    "verify_solution",
]
