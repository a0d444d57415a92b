from __future__ import annotations

import abc
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import duckdb
import numpy as np

from . import _tables as tb
from ._arcs import TWO_PI, ArcSet, arcs_from_runs
from ._branch import CUT_GUARD, SqrtRBranch
from ._coefficients import CoefficientTables, build_coefficient_tables
from ._exceptions import (
    ArcError,
    FieldError,
    InconsistentSupportError,
    NotFullCircleError,
)
from ._field import ExternalField, PolynomialWeight, TrigExponentialWeight
from ._measures import DensityProfile, DiscreteMeasure, cosine_nodes
from ._quadrature import (
    START_NODES,
    conjugate_function,
    is_power_of_two,
    pv_cauchy_on_arcs,
)
from ._types import ComplexArray, FloatArray

logger = logging.getLogger(__name__)

NEGATIVE_FLOOR = 1e-10
FULL_CIRCLE_FLOOR = 1e-8
IMAG_TOL = 1e-6


class DensityFormula(abc.ABC):
    """F(z) for a field on a fixed proper support.

    On the arcs ``value`` returns the density formula; in the gaps it
    returns F - g, the part whose gap integrals vanish at the true
    endpoints.
    """

    label = ""

    def __init__(self, support: ArcSet, branch: Optional[SqrtRBranch] = None) -> None:
        if support.is_full:
            raise ArcError(
                "Density formulas need proper arcs; use the full-circle route."
            )
        self.support = support
        self.branch = branch if branch is not None else SqrtRBranch(support)

    @abc.abstractmethod
    def value(
        self, theta: FloatArray, root: ComplexArray, *, on_cut: bool
    ) -> ComplexArray: ...

    def on_arcs(self, nodes: int) -> ComplexArray:
        s = cosine_nodes(nodes)
        rows = []
        for k in range(self.support.k):
            theta, root, _ = self.branch.on_arc(k, s)
            rows.append(self.value(theta, root, on_cut=True))
        return np.vstack(rows)

    def in_gap(self, theta: FloatArray) -> ComplexArray:
        root = self.branch.offcut(np.exp(1j * theta))
        return self.value(theta, root, on_cut=False)


class PolynomialFormula(DensityFormula):
    """Closed form for w = prod |z - z_j|^lambda_j.

    Built from the residues at z_j and at the reflected points 1/conj(z_j).
    """

    label = "polynomial"

    def __init__(
        self,
        weight: PolynomialWeight,
        support: ArcSet,
        branch: Optional[SqrtRBranch] = None,
    ) -> None:
        super().__init__(support, branch)
        zeros = weight.zeros
        reflected = 1.0 / np.conj(zeros)
        points = np.concatenate([zeros, reflected])
        if np.any(self.branch.cut_distance(points) < CUT_GUARD):
            raise FieldError(
                "A zero of the weight or its reflection lies on the support.",
                stage="density",
            )
        self.poles = points
        lam = np.concatenate([weight.exponents, weight.exponents])
        self.residues = lam * points / self.branch.offcut(points)

    def value(
        self, theta: FloatArray, root: ComplexArray, *, on_cut: bool
    ) -> ComplexArray:
        zeta = np.exp(1j * theta)[:, None]
        terms = self.residues[None, :] / (self.poles[None, :] - zeta)
        return root * terms.sum(axis=1) / TWO_PI


class TrigFormula(DensityFormula):
    """Closed form for w = exp(-t) from the Laurent data of 1/(sqrt(R)(zeta - z))."""

    label = "trig"

    def __init__(
        self,
        weight: TrigExponentialWeight,
        support: ArcSet,
        branch: Optional[SqrtRBranch] = None,
        tables: Optional[CoefficientTables] = None,
    ) -> None:
        super().__init__(support, branch)
        up_to = max(weight.degree, support.k)
        if tables is None:
            tables = build_coefficient_tables(support, up_to, branch=self.branch)
        elif tables.support != support or tables.up_to < up_to:
            raise ArcError(
                "Coefficient tables were built for a different support.",
                stage="density",
            )
        self.weight = weight
        self.tables = tables

    def value(
        self, theta: FloatArray, root: ComplexArray, *, on_cut: bool
    ) -> ComplexArray:
        z = np.exp(1j * theta)
        k = self.support.k
        total = np.zeros(z.shape, dtype=complex)
        for m in range(k, self.weight.degree + 1):
            c = self.weight.coefficient(m)
            if c != 0:
                total += m * c * self.tables.s(m + 1, z)
        for m in range(-self.weight.degree, 0):
            c = self.weight.coefficient(m)
            if c != 0:
                total -= m * c * self.tables.r(-m - 1, z)
        return root * total / math.pi


class GeneralFormula(DensityFormula):
    """(sqrt(R(z)) / (pi i)) times the Cauchy integral of g over the arcs."""

    label = "general"

    def __init__(
        self,
        field: ExternalField,
        support: ArcSet,
        branch: Optional[SqrtRBranch] = None,
        *,
        start: int = START_NODES,
    ) -> None:
        super().__init__(support, branch)
        self.field = field
        self.start = start

    def value(
        self, theta: FloatArray, root: ComplexArray, *, on_cut: bool
    ) -> ComplexArray:
        integral = pv_cauchy_on_arcs(
            self.branch,
            self.field.g,
            np.exp(1j * theta),
            start=self.start,
            subtracted=not on_cut,
        )
        return root * integral / (math.pi * 1j)


def formula_for(
    field: ExternalField,
    support: ArcSet,
    *,
    branch: Optional[SqrtRBranch] = None,
    start: int = START_NODES,
) -> DensityFormula:
    if isinstance(field, PolynomialWeight):
        return PolynomialFormula(field, support, branch)
    if isinstance(field, TrigExponentialWeight):
        return TrigFormula(field, support, branch)
    return GeneralFormula(field, support, branch, start=start)


def _clamp(values: FloatArray) -> FloatArray:
    return np.where((values < 0) & (values >= -NEGATIVE_FLOOR), 0.0, values)


def _profile_from_formula(
    formula: DensityFormula, nodes: int, *, strict: bool, imag_tol: float
) -> DensityProfile:
    raw = formula.on_arcs(nodes)
    imag = float(np.max(np.abs(raw.imag)))
    values = raw.real
    if strict:
        if imag > imag_tol:
            raise InconsistentSupportError(
                f"{formula.label} density has imaginary part {imag:.3e} "
                "on the support.",
                stage="density",
            )
        if np.min(values) < -NEGATIVE_FLOOR:
            raise InconsistentSupportError(
                f"{formula.label} density is negative ({np.min(values):.3e}) "
                "on the support.",
                stage="density",
            )
    return DensityProfile.on_arcs(formula.support, _clamp(values), imag_residual=imag)


def full_circle_density(
    field: ExternalField,
    grid: int = 2048,
    *,
    strict: bool = True,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> DensityProfile:
    """Density under the hypothesis that the support is the whole circle."""
    if grid < 8 or not is_power_of_two(grid):
        raise ArcError(
            f"`grid` must be a power of two >= 8 (got {grid}).", stage="density"
        )
    theta = TWO_PI * np.arange(grid) / grid
    if isinstance(field, (PolynomialWeight, TrigExponentialWeight)):
        values = field.full_circle_density(theta)
    else:
        values = 1.0 / TWO_PI - conjugate_function(field.q_prime(theta)) / math.pi
    if strict and np.min(values) < -FULL_CIRCLE_FLOOR:
        violations = arcs_from_runs(
            tb.circular_runs(tb.resolve_connection(con), values < -FULL_CIRCLE_FLOOR),
            grid,
        )
        raise NotFullCircleError(
            f"support is not the full circle: density reaches {np.min(values):.3e}.",
            violations,
            stage="density",
        )
    return DensityProfile.on_circle(_clamp(values))


def general_density(
    field: ExternalField,
    support: ArcSet,
    nodes: int = 64,
    *,
    strict: bool = True,
    imag_tol: float = IMAG_TOL,
    start: int = START_NODES,
) -> DensityProfile:
    return _profile_from_formula(
        GeneralFormula(field, support, start=start),
        nodes,
        strict=strict,
        imag_tol=imag_tol,
    )


def polynomial_density(
    weight: PolynomialWeight,
    support: ArcSet,
    nodes: int = 64,
    *,
    strict: bool = True,
    imag_tol: float = IMAG_TOL,
) -> DensityProfile:
    return _profile_from_formula(
        PolynomialFormula(weight, support), nodes, strict=strict, imag_tol=imag_tol
    )


def trig_density(
    weight: TrigExponentialWeight,
    support: ArcSet,
    nodes: int = 64,
    *,
    tables: Optional[CoefficientTables] = None,
    strict: bool = True,
    imag_tol: float = IMAG_TOL,
) -> DensityProfile:
    if strict and support.k > weight.degree:
        raise InconsistentSupportError(
            f"K = {support.k} arcs exceed the degree M = {weight.degree} "
            "of the weight.",
            stage="density",
        )
    formula = TrigFormula(weight, support, tables=tables)
    return _profile_from_formula(formula, nodes, strict=strict, imag_tol=imag_tol)


def density_on(
    field: ExternalField,
    support: ArcSet,
    *,
    nodes: int = 64,
    grid: int = 2048,
    strict: bool = True,
    quad_nodes: int = START_NODES,
) -> DensityProfile:
    """Dispatch to the matching formula for the field class and support."""
    if support.is_full:
        return full_circle_density(field, grid, strict=strict)
    if isinstance(field, PolynomialWeight):
        return polynomial_density(field, support, nodes, strict=strict)
    if isinstance(field, TrigExponentialWeight):
        return trig_density(field, support, nodes, strict=strict)
    return general_density(field, support, nodes, strict=strict, start=quad_nodes)


@dataclass
class SquaredDensityScan:
    """p(theta) on a uniform grid and the closure of {p > floor} as arcs."""

    theta: FloatArray
    values: FloatArray
    support: Optional[ArcSet]

    def to_relation(
        self,
        con: Optional[duckdb.DuckDBPyConnection] = None,
        *,
        materialize: bool = False,
    ) -> duckdb.DuckDBPyRelation:
        conn = tb.resolve_connection(con)
        return tb.build_columns_relation(
            conn,
            [self.theta, self.values],
            [("theta", "DOUBLE"), ("p", "DOUBLE")],
            materialize,
        )


def compute_p(
    field: ExternalField,
    measure: Union[DensityProfile, DiscreteMeasure],
    grid: int = 2048,
    *,
    floor: float = 0.0,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> SquaredDensityScan:
    """Evaluate p(theta), whose positive set closes up to the support."""
    if not field.has_second_derivative:
        raise FieldError(
            "p(theta) needs Q''; the sampled field has no second derivative.",
            stage="density",
        )
    if isinstance(measure, DiscreteMeasure):
        nodes, weights = measure.theta, measure.weights
    else:
        nodes, weights = measure.quadrature()
    theta = TWO_PI * np.arange(grid) / grid
    qp_theta = np.asarray(field.q_prime(theta))
    qp_nodes = np.asarray(field.q_prime(nodes))
    diagonal = 2.0 * np.asarray(field.q_second(theta))
    half = (theta[:, None] - nodes[None, :]) / 2.0
    close = np.abs(np.sin(half)) < 1e-7
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = (qp_theta[:, None] - qp_nodes[None, :]) / np.tan(half)
    kernel = np.where(close, diagonal[:, None], kernel)
    values = (kernel @ weights) / math.pi**2 - (qp_theta / math.pi) ** 2
    values = values + 1.0 / (4.0 * math.pi**2)
    runs = tb.circular_runs(tb.resolve_connection(con), values > floor)
    support = arcs_from_runs(runs, grid) if runs else None
    logger.debug("p(theta) positive on %s", support)
    return SquaredDensityScan(theta, values, support)
