from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import duckdb
import numpy as np

from . import _tables as tb
from ._arcs import TWO_PI, ArcSet
from ._config import Tolerances
from ._exceptions import ArcError, VerificationError
from ._field import ExternalField
from ._measures import DensityProfile
from ._quadrature import cot_transform, log_kernel_potential
from ._types import Angles, FloatArray
from .solution import EquilibriumSolution

logger = logging.getLogger(__name__)

VARIATION_LIMIT = 1e-3
INTERIOR_MARGIN = 1e-9

# report name -> Tolerances attribute
RESIDUALS: Dict[str, str] = {
    "frostman_equality_sup": "frostman_equality",
    "frostman_inequality_violation": "frostman_inequality",
    "mass_gap": "mass",
    "density_square_sup": "density_square",
    "conjugate_sup": "conjugate",
    "imag_part_sup": "imag_part",
}


@dataclass
class ResidualReport:
    """Named residuals of a solution next to the tolerances they must meet."""

    values: Dict[str, float]
    tolerances: Dict[str, float]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def failures(self) -> List[str]:
        return [
            name
            for name, value in self.values.items()
            if not math.isfinite(value) or value > self.tolerances[name]
        ]

    def rows(self) -> List[Tuple[str, float, float, bool]]:
        failed = set(self.failures())
        return [
            (name, value, self.tolerances[name], name not in failed)
            for name, value in self.values.items()
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "residuals": dict(self.values),
            "tolerances": dict(self.tolerances),
            "failed": self.failures(),
            "pass": self.passed,
        }


def total_potential(
    field: ExternalField, profile: DensityProfile, theta: Angles
) -> FloatArray:
    """U + Q at the given angles; the profile may carry a signed density."""
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    potential = log_kernel_potential(profile, t, signed=True)
    return np.asarray(potential) + np.asarray(field.q(t))


def assemble_solution(
    field: ExternalField,
    support: ArcSet,
    profile: DensityProfile,
    *,
    strict: bool = True,
    con: Optional[duckdb.DuckDBPyConnection] = None,
    materialize: bool = False,
) -> EquilibriumSolution:
    """Read F_w off the profile and derive V_w and the capacity.

    F_w is U + Q at the sample of median density. With ``strict`` a spread
    of U + Q above 1e-3 across the samples is refused.
    """
    if profile.support != support:
        raise ArcError("Profile was computed on a different support.", stage="verify")
    theta = profile.theta.reshape(-1)
    values = profile.values.reshape(-1)
    totals = total_potential(field, profile, theta)
    variation = float(np.max(totals) - np.min(totals))
    middle = int(np.argsort(values, kind="stable")[values.size // 2])
    robin = float(totals[middle])
    if strict and variation > VARIATION_LIMIT:
        raise VerificationError(
            f"U+Q varies by {variation:.3e} on the support; F_w is not defined.",
            variation,
            stage="verify",
        )
    nodes, weights = profile.quadrature()
    q_integral = float(np.asarray(field.q(nodes)) @ weights)
    logger.info(
        "Assembled solution: F_w=%.12g V_w=%.12g (spread %.3e)",
        robin,
        robin + q_integral,
        variation,
    )
    return EquilibriumSolution(
        connection=tb.resolve_connection(con),
        field=field,
        support=support,
        profile=profile,
        robin_constant=robin,
        q_integral=q_integral,
        variation=variation,
        materialize=materialize,
    )


def check_frostman(
    solution: EquilibriumSolution, grid: int = 4096
) -> Tuple[float, float]:
    """Equality residual on the support and inequality violation off it."""
    theta = TWO_PI * np.arange(grid) / grid
    totals = total_potential(solution.field, solution.profile, theta)
    support = solution.support
    inside = support.contains(theta)
    if not support.is_full:
        inside = inside & (support.endpoint_distance(theta) > INTERIOR_MARGIN)
    outside = ~support.contains(theta)
    robin = solution.robin_constant
    equality = float(np.max(np.abs(totals[inside] - robin))) if np.any(inside) else 0.0
    violation = (
        float(np.max(np.clip(robin - totals[outside], 0.0, None)))
        if np.any(outside)
        else 0.0
    )
    return equality, violation


def _q_prime_on_samples(field: ExternalField, profile: DensityProfile) -> FloatArray:
    values = field.q_prime(profile.theta.reshape(-1))
    return np.asarray(values).reshape(profile.values.shape)


def density_square_residual(field: ExternalField, profile: DensityProfile) -> float:
    """sup over the samples of |f^2 - rhs| with

    rhs = (Q'/pi)^2 - (1/pi^2) PV int Q'(t) f(t) cot((theta - t)/2) dt + 1/(4 pi^2).
    """
    qp = _q_prime_on_samples(field, profile)
    smoothed = cot_transform(profile, weight=field.q_prime)
    rhs = (qp / math.pi) ** 2 - smoothed / math.pi**2 + 1.0 / (4.0 * math.pi**2)
    return float(np.max(np.abs(profile.values**2 - rhs)))


def conjugate_residual(field: ExternalField, profile: DensityProfile) -> float:
    """sup over the samples of |conjugate of f - Q'/pi|, f extended by zero."""
    qp = _q_prime_on_samples(field, profile)
    conjugate = cot_transform(profile) / TWO_PI
    return float(np.max(np.abs(conjugate - qp / math.pi)))


def residual_report(
    solution: EquilibriumSolution,
    tolerances: Optional[Tolerances] = None,
    *,
    grid: int = 4096,
) -> ResidualReport:
    """Evaluate every residual and attach the report to the solution."""
    tolerances = tolerances if tolerances is not None else Tolerances()
    equality, violation = check_frostman(solution, grid)
    values = {
        "frostman_equality_sup": equality,
        "frostman_inequality_violation": violation,
        "mass_gap": abs(solution.profile.mass() - 1.0),
        "density_square_sup": density_square_residual(solution.field, solution.profile),
        "conjugate_sup": conjugate_residual(solution.field, solution.profile),
        "imag_part_sup": float(solution.profile.imag_residual),
    }
    limits = {
        name: float(getattr(tolerances, attr)) for name, attr in RESIDUALS.items()
    }
    report = ResidualReport(values, limits)
    for name in report.failures():
        logger.warning(
            "Residual %s = %.3e exceeds %.1e", name, values[name], limits[name]
        )
    solution.report = report
    return report
