from ._arcs import ArcSet, parse_arcs
from ._config import ProblemConfig, SolverOptions, Tolerances
from ._exceptions import (
    ArcCollapseError,
    ArcError,
    ConfigError,
    ConvergenceError,
    EquilibriumError,
    FieldError,
    InconsistentSupportError,
    NotFullCircleError,
    QuadratureError,
    VerificationError,
)
from ._field import (
    ExternalField,
    PolynomialWeight,
    SampledField,
    TrigExponentialWeight,
    exponential_weight,
    field_from_json,
    uniform_field,
)
from ._measures import DensityProfile, DiscreteMeasure
from ._verify import ResidualReport
from .api import OracleResult, full_report, run_oracle, verify_solution
from .solution import EquilibriumSolution

__all__ = [
    "ArcCollapseError",
    "ArcError",
    "ArcSet",
    "ConfigError",
    "ConvergenceError",
    "DensityProfile",
    "DiscreteMeasure",
    "EquilibriumError",
    "EquilibriumSolution",
    "ExternalField",
    "FieldError",
    "InconsistentSupportError",
    "NotFullCircleError",
    "OracleResult",
    "PolynomialWeight",
    "ProblemConfig",
    "QuadratureError",
    "ResidualReport",
    "SampledField",
    "SolverOptions",
    "Tolerances",
    "TrigExponentialWeight",
    "VerificationError",
    "exponential_weight",
    "field_from_json",
    "full_report",
    "parse_arcs",
    "run_oracle",
    "uniform_field",
    "verify_solution",
]
