from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Mapping, Optional

try:
    from typing import Literal
except ImportError:  # pragma: no cover - Python < 3.8
    from typing_extensions import Literal

import duckdb

from . import _support as sp
from . import _tables as tb
from . import _validation as v
from ._arcs import TWO_PI, ArcSet
from ._config import SolverOptions, Tolerances
from ._density import density_on, full_circle_density
from ._exceptions import ArcCollapseError, ConfigError, EquilibriumError
from ._field import ExternalField, field_from_json
from ._measures import DiscreteMeasure
from ._oracle import extract_support, extrapolated_energy, minimize_energy
from ._verify import assemble_solution, residual_report
from .solution import EquilibriumSolution

logger = logging.getLogger(__name__)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag solver errors raised inside the block with ``name``."""
    try:
        yield
    except EquilibriumError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def _without_arc(support: ArcSet, error: ArcCollapseError) -> ArcSet:
    pairs = support.pairs()
    index = error.index % len(pairs)
    if error.kind == "gap":
        # merge the arcs on both sides of the collapsed gap
        nxt = (index + 1) % len(pairs)
        alpha = pairs[index][0]
        beta = pairs[nxt][1] if nxt > index else pairs[nxt][1] + TWO_PI
        kept = [pair for i, pair in enumerate(pairs) if i not in {index, nxt}]
        kept.append((alpha, beta))
    else:
        kept = [pair for i, pair in enumerate(pairs) if i != index]
    return ArcSet.from_pairs(kept)


def solve_support(
    field: ExternalField,
    guess: sp.InitialGuess,
    options: SolverOptions,
) -> sp.SupportSolveReport:
    """Endpoint solve that drops an arc and retries whenever one collapses."""
    current = guess.support
    while True:
        try:
            return sp.solve_endpoints(
                field,
                current,
                tol=options.endpoint_tol,
                max_iter=options.max_iter,
                nodes=options.samples_per_arc,
                quad_nodes=options.quad_nodes,
                provenance=guess.provenance,
            )
        except ArcCollapseError as exc:
            if current.k <= 1:
                raise
            current = _without_arc(current, exc)
            logger.warning(
                "%s %d collapsed; retrying with K=%d", exc.kind, exc.index, current.k
            )


def full_report(
    field: ExternalField,
    *,
    options: Optional[SolverOptions] = None,
    tolerances: Optional[Tolerances] = None,
    con: Optional[duckdb.DuckDBPyConnection] = None,
    materialize: Literal["all", "none"] = "none",
) -> EquilibriumSolution:
    """Solve for the equilibrium measure of ``field`` and verify it.

    Parameters
    ----------
    field : ExternalField
        External field Q = -log w on the unit circle.
    options : SolverOptions, optional
        Grid sizes, iteration budgets and an optional initial support.
    tolerances : Tolerances, optional
        Thresholds of the residual report.
    con : duckdb.DuckDBPyConnection, optional
        DuckDB connection used for run detection and the output relations.
    materialize : {"all", "none"}, default "none"
        Whether output relations are stored in temp tables.

    Returns
    -------
    EquilibriumSolution
        Solution with its residual report attached; ``solution.passed``
        tells whether every residual met its tolerance.

    Examples
    --------
    >>> from equilibria import examples, full_report
    >>> solution = full_report(examples.uniform_weight())
    >>> solution.k, solution.passed
    (0, True)
    """
    keep = v.resolve_materialize(materialize)
    options = options if options is not None else SolverOptions()
    conn = tb.resolve_connection(con)
    with stage("field"):
        field.validate_for_solve()
    with stage("support"):
        decision = sp.detect_full_circle(field, options.grid, con=conn)
    support_report: Optional[sp.SupportSolveReport] = None
    if decision.is_full:
        if options.arcs is not None or options.k is not None:
            logger.warning("Full-circle support found; ignoring the arc settings")
        support = ArcSet.full_circle()
        with stage("density"):
            profile = full_circle_density(field, options.grid, con=conn)
    else:
        with stage("support"):
            guess = sp.initial_guess(
                field,
                decision,
                arcs=options.arcs,
                k=options.k,
                grid=options.grid,
                oracle_tol=options.oracle_tol,
                oracle_max_iter=options.oracle_max_iter,
                threshold=options.support_threshold,
                use_oracle=options.use_oracle,
                con=conn,
            )
            support_report = solve_support(field, guess, options)
        support = support_report.support
        assert support_report.profile is not None
        profile = support_report.profile
    with stage("verify"):
        solution = assemble_solution(
            field, support, profile, strict=True, con=conn, materialize=keep
        )
        solution.support_report = support_report
        residual_report(solution, tolerances, grid=options.verify_grid)
    return solution


def verify_solution(
    document: Mapping[str, Any],
    *,
    options: Optional[SolverOptions] = None,
    tolerances: Optional[Tolerances] = None,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> EquilibriumSolution:
    """Recompute every residual for a stored solution document.

    The density is rebuilt from the stored field and arcs without the
    consistency checks, so a wrong support shows up in the report rather
    than as an exception.
    """
    options = options if options is not None else SolverOptions()
    try:
        field = field_from_json(document["field"])
        support = ArcSet.from_json(document["solution"]["arcs"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(
            f"Malformed solution document: {exc}", stage="config"
        ) from exc
    conn = tb.resolve_connection(con)
    with stage("density"):
        profile = density_on(
            field,
            support,
            nodes=options.samples_per_arc,
            grid=options.grid,
            strict=False,
            quad_nodes=options.quad_nodes,
        )
    with stage("verify"):
        solution = assemble_solution(field, support, profile, strict=False, con=conn)
        residual_report(solution, tolerances, grid=options.verify_grid)
    return solution


@dataclass
class OracleResult:
    """Discrete minimizer with its support guess and extrapolated energy."""

    measure: DiscreteMeasure
    support: ArcSet
    extrapolated: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "grid": self.measure.size,
            "energy": self.measure.energy,
            "robin_constant": self.measure.robin_constant,
            "energy_extrapolated": self.extrapolated,
            "iterations": self.measure.iterations,
            "frostman_gap": self.measure.gap,
            "arcs": self.support.to_json(),
        }


def run_oracle(
    field: ExternalField,
    *,
    options: Optional[SolverOptions] = None,
    extrapolate: bool = False,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> OracleResult:
    """Brute-force discrete minimizer on ``options.grid`` points."""
    options = options if options is not None else SolverOptions()
    with stage("field"):
        field.validate_for_solve()
    with stage("oracle"):
        measure = minimize_energy(
            field,
            options.grid,
            tol=options.oracle_tol,
            max_iter=options.oracle_max_iter,
        )
        support = extract_support(measure, options.support_threshold, con=con)
        extrapolated = None
        if extrapolate:
            extrapolated = extrapolated_energy(
                field,
                options.grid,
                tol=options.oracle_tol,
                max_iter=options.oracle_max_iter,
            ).extrapolated
    return OracleResult(measure, support, extrapolated)
