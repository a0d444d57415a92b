from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from typing import Any, Dict, List, Optional, Tuple

import duckdb
import numpy as np
from scipy import linalg

from . import _tables as tb
from ._arcs import TWO_PI, ArcSet, arcs_from_runs
from ._branch import SqrtRBranch
from ._coefficients import build_coefficient_tables
from ._density import (
    NEGATIVE_FLOOR,
    DensityFormula,
    density_on,
    formula_for,
    full_circle_density,
)
from ._exceptions import (
    ArcCollapseError,
    ArcError,
    ConvergenceError,
    FieldError,
    InconsistentSupportError,
)
from ._field import ExternalField, PolynomialWeight, TrigExponentialWeight
from ._measures import DensityProfile, DiscreteMeasure, cosine_nodes
from ._oracle import extract_support, minimize_energy
from ._quadrature import START_NODES, arc_integral
from ._types import FloatArray

logger = logging.getLogger(__name__)

COLLAPSE_WIDTH = 1e-6
FD_STEP = 1e-6
GAP_NODES = 64
GAP_TOL = 1e-11
MAX_GAP_NODES = 2**12
POLISH_STEPS = 3
ENDPOINT_OFFSET = 1e-8
ENDPOINT_DENSITY_TOL = 1e-3

GUESS_ORACLE = "oracle"
GUESS_USER = "user"
GUESS_HEURISTIC = "convexity-heuristic"


@dataclass
class FullCircleDecision:
    """Outcome of testing the full-circle density for a sign change."""

    is_full: bool
    profile: DensityProfile
    min_density: float
    violations: Optional[ArcSet] = None

    def seed(self) -> Optional[ArcSet]:
        """Complement of the violating intervals, a first guess for the arcs."""
        if self.violations is None or self.violations.is_full:
            return None
        return ArcSet.from_pairs(self.violations.gaps())


def detect_full_circle(
    field: ExternalField,
    grid: int = 2048,
    *,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> FullCircleDecision:
    profile = full_circle_density(field, grid, strict=False)
    lowest = profile.min_value()
    if lowest >= -NEGATIVE_FLOOR:
        logger.info("Full-circle density is nonnegative (min %.3e)", lowest)
        return FullCircleDecision(True, profile, lowest)
    negative = profile.values < -NEGATIVE_FLOOR
    runs = tb.circular_runs(tb.resolve_connection(con), negative)
    violations = arcs_from_runs(runs, grid)
    logger.info("Full-circle density turns negative on %s", violations)
    return FullCircleDecision(False, profile, lowest, violations)


def arc_count_bound(field: ExternalField) -> Optional[int]:
    """Largest admissible K: the zero count J or the trig degree M."""
    if isinstance(field, PolynomialWeight):
        return int(field.zeros.size)
    if isinstance(field, TrigExponentialWeight):
        return int(field.degree)
    return None


def _coefficient_vector(field: TrigExponentialWeight) -> Dict[int, complex]:
    gamma: Dict[int, complex] = {0: 1.0 / TWO_PI}
    for m in range(-field.degree, field.degree + 1):
        if m != 0:
            gamma[m] = -m * field.coefficient(m) / math.pi
    return gamma


def moment_residuals(
    field: ExternalField,
    support: ArcSet,
    *,
    branch: Optional[SqrtRBranch] = None,
    start: int = START_NODES,
) -> np.ndarray:
    """K moment conditions scaled as 2/i times int z^k g(z) dz / sqrt(R(z))."""
    branch = branch if branch is not None else SqrtRBranch(support)
    k_arcs = support.k
    if isinstance(field, PolynomialWeight):
        zeros = field.zeros
        reflected = 1.0 / np.conj(zeros)
        root_z = branch.offcut(zeros)
        root_r = branch.offcut(reflected)
        out = np.zeros(k_arcs, dtype=complex)
        for k in range(1, k_arcs + 1):
            out[k - 1] = np.sum(
                field.exponents * (zeros**k / root_z + reflected**k / root_r)
            )
        out[-1] -= 1.0 + field.total_exponent
        return out
    if isinstance(field, TrigExponentialWeight):
        gamma = _coefficient_vector(field)
        tables = build_coefficient_tables(
            support, max(field.degree, k_arcs), branch=branch
        )
        out = np.zeros(k_arcs, dtype=complex)
        for k in range(k_arcs):
            at_infinity = 0j
            at_zero = 0j
            for m, coeff in gamma.items():
                n_inf = k + m - k_arcs + 1
                if n_inf >= 0:
                    at_infinity -= coeff * tables.at_infinity[n_inf]
                n_zero = -1 - k - m
                if n_zero >= 0:
                    at_zero += coeff * tables.at_zero[n_zero] / tables.root_at_zero
            out[k] = TWO_PI * (at_zero + at_infinity)
        return out
    out = np.zeros(k_arcs, dtype=complex)
    for k in range(k_arcs):

        def integrand(theta: FloatArray, power: int = k) -> Any:
            return np.exp(1j * power * theta) * field.g(theta)

        out[k] = 2.0 * arc_integral(branch, integrand, start=start) / 1j
    return out


def _gap_integral(formula: DensityFormula, start: float, end: float) -> complex:
    mid = (start + end) / 2.0
    half = (end - start) / 2.0
    n = GAP_NODES
    previous: Optional[complex] = None
    while n <= MAX_GAP_NODES:
        s = cosine_nodes(n)
        theta = mid + half * np.cos(s)
        values = formula.in_gap(theta)
        current = complex(np.sum(values * half * np.sin(s)) * math.pi / n)
        if previous is not None and abs(current - previous) <= GAP_TOL * max(
            1.0, abs(current)
        ):
            return current
        previous = current
        n *= 2
    assert previous is not None
    logger.warning("Gap integral over (%.6f, %.6f) did not settle", start, end)
    return previous


def gap_residuals(
    field: ExternalField,
    support: ArcSet,
    *,
    formula: Optional[DensityFormula] = None,
) -> np.ndarray:
    """Integrals of F - g over each gap; all vanish at the true endpoints."""
    formula = formula if formula is not None else formula_for(field, support)
    out = np.zeros(support.k, dtype=complex)
    for k, (start, end) in enumerate(support.gaps()):
        if end - start < COLLAPSE_WIDTH:
            raise ArcCollapseError(
                f"Gap {k} between arcs has width {end - start:.3e}; "
                "reduce K and retry.",
                k,
                "gap",
                stage="support",
            )
        out[k] = _gap_integral(formula, float(start), float(end))
    return out


def mass_residual(
    field: ExternalField,
    support: ArcSet,
    *,
    nodes: int = 64,
    grid: int = 2048,
    formula: Optional[DensityFormula] = None,
) -> float:
    if support.is_full:
        return full_circle_density(field, grid, strict=False).mass() - 1.0
    formula = formula if formula is not None else formula_for(field, support)
    profile = DensityProfile.on_arcs(support, formula.on_arcs(nodes).real)
    return profile.mass() - 1.0


class EndpointSystem:
    """Stacked moment, gap and mass residuals as a function of the 2K endpoints."""

    def __init__(
        self,
        field: ExternalField,
        k: int,
        *,
        nodes: int = 64,
        quad_nodes: int = START_NODES,
    ) -> None:
        self.field = field
        self.k = k
        self.nodes = nodes
        self.quad_nodes = quad_nodes

    def families(self, support: ArcSet) -> Dict[str, np.ndarray]:
        branch = SqrtRBranch(support)
        formula = formula_for(
            self.field, support, branch=branch, start=self.quad_nodes
        )
        return {
            "moment": moment_residuals(
                self.field, support, branch=branch, start=self.quad_nodes
            ),
            "gap": gap_residuals(self.field, support, formula=formula),
            "mass": np.array(
                [mass_residual(self.field, support, nodes=self.nodes, formula=formula)]
            ),
        }

    def vector(self, support: ArcSet) -> FloatArray:
        fam = self.families(support)
        return np.concatenate(
            [
                fam["moment"].real,
                fam["moment"].imag,
                fam["gap"].real,
                fam["gap"].imag,
                fam["mass"].real,
            ]
        )

    def jacobian(self, x: FloatArray) -> FloatArray:
        columns = []
        for i in range(x.size):
            step = np.zeros(x.size)
            step[i] = FD_STEP
            plus = self.vector(ArcSet(x + step))
            minus = self.vector(ArcSet(x - step))
            columns.append((plus - minus) / (2.0 * FD_STEP))
        return np.column_stack(columns)


@dataclass
class SupportSolveReport:
    support: ArcSet
    iterations: int
    provenance: str
    residual_norms: Dict[str, float]
    norm: float
    converged: bool
    endpoint_density: float = math.nan
    profile: Optional[DensityProfile] = dataclass_field(default=None, repr=False)

    @property
    def k(self) -> int:
        return 0 if self.support.is_full else self.support.k

    def to_json(self) -> Dict[str, Any]:
        return {
            "arcs": self.support.to_json(),
            "k": self.k,
            "iterations": self.iterations,
            "provenance": self.provenance,
            "residual_norms": dict(self.residual_norms),
            "norm": self.norm,
            "converged": self.converged,
            "endpoint_density": self.endpoint_density,
        }


def _family_norms(families: Dict[str, np.ndarray]) -> Dict[str, float]:
    return {name: float(np.max(np.abs(values))) for name, values in families.items()}


def _check_widths(support: ArcSet) -> None:
    widths = 2.0 * support.halfwidths
    narrow = np.flatnonzero(widths < COLLAPSE_WIDTH)
    if narrow.size:
        index = int(narrow[0])
        raise ArcCollapseError(
            f"Arc {index} collapsed to width {widths[index]:.3e}; reduce K and retry.",
            index,
            "arc",
            stage="support",
        )


def _admissible(x: FloatArray) -> Optional[ArcSet]:
    try:
        return ArcSet(x)
    except ArcError:
        return None


def endpoint_density(profile: DensityProfile) -> float:
    """Largest interpolated density just inside an arc endpoint."""
    if profile.is_full:
        return 0.0
    support = profile.support
    inner = np.concatenate(
        [support.alphas + ENDPOINT_OFFSET, support.betas - ENDPOINT_OFFSET]
    )
    return float(np.max(np.abs(profile.evaluate(inner))))


def solve_endpoints(
    field: ExternalField,
    initial: ArcSet,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
    nodes: int = 64,
    quad_nodes: int = START_NODES,
    provenance: str = GUESS_USER,
) -> SupportSolveReport:
    """Damped Gauss-Newton least squares over the endpoint angles."""
    if initial.is_full:
        raise ArcError("Endpoint solve needs proper arcs.", stage="support")
    bound = arc_count_bound(field)
    if bound is not None and initial.k > bound:
        raise InconsistentSupportError(
            f"K = {initial.k} arcs exceed the bound {bound} for this weight.",
            stage="support",
        )
    _check_widths(initial)
    system = EndpointSystem(field, initial.k, nodes=nodes, quad_nodes=quad_nodes)
    support = initial
    residual = system.vector(support)
    norm = float(np.linalg.norm(residual))
    iteration = 0
    polish = 0
    while True:
        if norm < tol:
            polish += 1
            if polish > POLISH_STEPS:
                break
        elif iteration >= max_iter:
            raise ConvergenceError(
                f"Endpoint solve did not converge in {max_iter} iterations "
                f"(residual norm {norm:.3e}).",
                stage="support",
            )
        iteration += 1
        x = support.as_vector()
        jac = system.jacobian(x)
        step, *_ = linalg.lstsq(jac, -residual)
        damping = 1.0
        accepted = False
        while damping > 1e-6:
            candidate = _admissible(x + damping * step)
            if candidate is not None:
                _check_widths(candidate)
                trial = system.vector(candidate)
                trial_norm = float(np.linalg.norm(trial))
                if trial_norm < norm:
                    support, residual, norm = candidate, trial, trial_norm
                    accepted = True
                    break
            damping /= 2.0
        logger.debug(
            "Gauss-Newton iteration %d: norm %.3e damping %.3g",
            iteration,
            norm,
            damping,
        )
        if not accepted:
            if norm < tol:
                break
            raise ConvergenceError(
                f"Endpoint solve stalled at residual norm {norm:.3e}.", stage="support"
            )
    families = system.families(support)
    profile = density_on(
        field, support, nodes=nodes, strict=True, quad_nodes=quad_nodes
    )
    edge = endpoint_density(profile)
    if edge > ENDPOINT_DENSITY_TOL:
        raise InconsistentSupportError(
            f"Density does not vanish at the endpoints (reaches {edge:.3e}).",
            stage="support",
        )
    logger.info(
        "Endpoint solve converged: K=%d after %d iterations (norm %.3e)",
        support.k,
        iteration,
        norm,
    )
    return SupportSolveReport(
        support=support,
        iterations=iteration,
        provenance=provenance,
        residual_norms=_family_norms(families),
        norm=norm,
        converged=True,
        endpoint_density=edge,
        profile=profile,
    )


@dataclass
class ConvexityHint:
    """Windows where Q'' >= 0; each meets the support in at most one arc."""

    windows: List[Tuple[float, float]]
    max_arcs: int
    convex_everywhere: bool


def convexity_heuristic(
    field: ExternalField,
    window: Optional[Tuple[float, float]] = None,
    *,
    samples: int = 2048,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> ConvexityHint:
    if not field.has_second_derivative:
        raise FieldError("Convexity scan needs Q''.", stage="support")
    conn = tb.resolve_connection(con)
    if window is None:
        theta = TWO_PI * np.arange(samples) / samples
        convex = np.asarray(field.q_second(theta)) >= -1e-12
        runs = tb.circular_runs(conn, convex)
        step = TWO_PI / samples
    else:
        start, end = float(window[0]), float(window[1])
        theta = np.linspace(start, end, samples)
        convex = np.asarray(field.q_second(theta)) >= -1e-12
        runs = tb.index_runs(conn, convex)
        step = (end - start) / (samples - 1)
    everywhere = bool(np.all(convex))
    windows = [
        (float(theta[0] + first * step), float(theta[0] + last * step))
        for first, last in runs
    ]
    hint = 1 if everywhere else max(1, len(windows))
    return ConvexityHint(windows, hint, everywhere)


@dataclass
class InitialGuess:
    support: ArcSet
    provenance: str
    measure: Optional[DiscreteMeasure] = None


def fit_arc_count(support: ArcSet, k: int) -> ArcSet:
    """Keep the k widest arcs, or split the widest ones until there are k."""
    if support.is_full:
        return support
    pairs = support.pairs()
    if k < len(pairs):
        pairs = sorted(pairs, key=lambda pair: pair[1] - pair[0], reverse=True)[:k]
    while len(pairs) < k:
        pairs.sort(key=lambda pair: pair[1] - pair[0], reverse=True)
        alpha, beta = pairs.pop(0)
        width = beta - alpha
        cut = alpha + 0.45 * width
        pairs.extend([(alpha, cut), (cut + 0.1 * width, beta)])
    return ArcSet.from_pairs(pairs)


def _convexity_cap(
    field: ExternalField, con: Optional[duckdb.DuckDBPyConnection]
) -> Optional[int]:
    if not field.has_second_derivative:
        return None
    hint = convexity_heuristic(field, con=con)
    return None if hint.convex_everywhere else hint.max_arcs


def initial_guess(
    field: ExternalField,
    decision: FullCircleDecision,
    *,
    arcs: Optional[ArcSet] = None,
    k: Optional[int] = None,
    grid: int = 2048,
    oracle_tol: float = 1e-5,
    oracle_max_iter: int = 50_000,
    threshold: float = 1e-3,
    use_oracle: bool = True,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> InitialGuess:
    """Starting arcs for the endpoint solve, with K capped by the known bounds."""
    measure: Optional[DiscreteMeasure] = None
    if arcs is not None:
        guess = InitialGuess(arcs, GUESS_USER)
    else:
        support: Optional[ArcSet] = None
        provenance = GUESS_HEURISTIC
        if use_oracle:
            measure = minimize_energy(
                field, grid, tol=oracle_tol, max_iter=oracle_max_iter
            )
            support = extract_support(measure, threshold, con=con)
            provenance = GUESS_ORACLE
        if support is None or support.is_full:
            support = decision.seed()
            provenance = GUESS_HEURISTIC
        if support is None:
            raise ArcError(
                "No initial arcs: the oracle and the sign scan both found "
                "the full circle.",
                stage="support",
            )
        guess = InitialGuess(support, provenance, measure)
    target = guess.support.k if k is None else k
    bound = arc_count_bound(field)
    if bound is not None and target > bound and (k is not None or arcs is not None):
        raise InconsistentSupportError(
            f"K = {target} arcs exceed the bound {bound} for this weight.",
            stage="support",
        )
    if k is None and arcs is None:
        caps = [c for c in (bound, _convexity_cap(field, con)) if c is not None]
        if caps and target > min(caps):
            cap = min(caps)
            seed = decision.seed()
            if guess.provenance == GUESS_ORACLE and seed is not None and seed.k <= cap:
                logger.info(
                    "Oracle found %d arcs above the cap %d; using the sign scan",
                    target,
                    cap,
                )
                guess = InitialGuess(seed, GUESS_HEURISTIC, measure)
                target = seed.k
            else:
                logger.info("Capping K at %d (guess had %d arcs)", cap, target)
                target = cap
    if target != guess.support.k:
        fitted = fit_arc_count(guess.support, target)
        guess = InitialGuess(fitted, guess.provenance, measure)
    logger.info("Initial arcs from %s: %s", guess.provenance, guess.support)
    return guess
