from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import duckdb
import numpy as np
from scipy.linalg import circulant

from . import _tables as tb
from ._arcs import TWO_PI, ArcSet, arcs_from_runs
from ._exceptions import ArcError, ConfigError, ConvergenceError
from ._field import ExternalField
from ._measures import DiscreteMeasure
from ._quadrature import is_power_of_two
from ._types import FloatArray

logger = logging.getLogger(__name__)

MIN_GRID = 64
CHECK_EVERY = 10
# relative slack for objective comparisons near the optimum
ACCEPT_RTOL = 1e-13


class EnergyMatrix:
    """Circulant log kernel on the grid theta_i = 2 pi i / N plus the field term.

    Off the diagonal A_ij = -log|2 sin((theta_i - theta_j)/2)|; the diagonal is
    log N. Then the constant mode has eigenvalue 0 and every other mode is at
    least log 4, so the energy is strictly convex on the simplex.
    """

    def __init__(self, n: int, q_values: Optional[FloatArray] = None) -> None:
        if n < 2:
            raise ConfigError("`grid` must have at least two points.")
        self.n = n
        j = np.arange(1, n)
        row = np.empty(n)
        row[0] = math.log(n)
        row[1:] = -np.log(np.abs(2.0 * np.sin(math.pi * j / n)))
        self.row = row
        self.eigenvalues = np.fft.rfft(row).real
        self.q = np.zeros(n) if q_values is None else np.asarray(q_values, dtype=float)

    @classmethod
    def for_field(cls, field: ExternalField, n: int) -> "EnergyMatrix":
        theta = TWO_PI * np.arange(n) / n
        return cls(n, np.asarray(field.q(theta), dtype=float))

    def apply(self, p: FloatArray) -> FloatArray:
        return np.fft.irfft(np.fft.rfft(p) * self.eigenvalues, n=self.n)

    def dense(self) -> FloatArray:
        return circulant(self.row)

    def objective(self, p: FloatArray) -> float:
        return float(p @ self.apply(p) + 2.0 * self.q @ p)

    def gradient(self, p: FloatArray) -> FloatArray:
        return 2.0 * (self.apply(p) + self.q)

    def lipschitz(self) -> float:
        return 2.0 * float(np.max(self.eigenvalues))

    def potential(self, p: FloatArray) -> FloatArray:
        """(A p + q)_i, the discrete U + Q of the minimized objective."""
        return self.apply(p) + self.q

    def energy(self, p: FloatArray) -> float:
        return self.objective(p)


def project_simplex(v: FloatArray) -> FloatArray:
    """Euclidean projection onto {p >= 0, sum p = 1} by sorting."""
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, v.size + 1)
    feasible = u - cumulative / index > 0
    rho = index[feasible][-1]
    tau = cumulative[feasible][-1] / rho
    return np.maximum(v - tau, 0.0)


def _gap(matrix: EnergyMatrix, p: FloatArray) -> float:
    u = matrix.potential(p)
    return float(np.max(u[p > 0]) - np.min(u))


def frostman_gap(measure: DiscreteMeasure, field: ExternalField) -> float:
    """max of U+Q over charged nodes minus its minimum over all nodes."""
    matrix = EnergyMatrix.for_field(field, measure.size)
    return _gap(matrix, measure.weights)


def minimize_energy(
    field: ExternalField,
    n: int = 2048,
    *,
    tol: float = 1e-5,
    max_iter: int = 50_000,
    start: Optional[FloatArray] = None,
) -> DiscreteMeasure:
    """Accelerated projected gradient on the probability simplex.

    Momentum restarts whenever the objective would increase by more than
    roundoff, so accepted iterates never raise it. The Frostman gap is
    refreshed every ``CHECK_EVERY`` iterations, accepted or not, and the loop
    stops once it drops below ``tol``.
    """
    if n < MIN_GRID or not is_power_of_two(n):
        raise ConfigError(
            f"`grid` must be a power of two >= {MIN_GRID} (got {n}).", stage="oracle"
        )
    matrix = EnergyMatrix.for_field(field, n)
    if start is None:
        x = np.full(n, 1.0 / n)
    else:
        x = project_simplex(np.asarray(start, dtype=float))
    y = x.copy()
    t = 1.0
    step = 1.0 / matrix.lipschitz()
    value = matrix.objective(x)
    trace: List[float] = [value]
    gap = _gap(matrix, x)
    iteration = 0
    while gap >= tol:
        if iteration >= max_iter:
            raise ConvergenceError(
                f"Energy minimization stopped after {max_iter} iterations "
                f"with Frostman gap {gap:.3e}.",
                stage="oracle",
            )
        iteration += 1
        candidate = project_simplex(y - step * matrix.gradient(y))
        candidate_value = matrix.objective(candidate)
        if candidate_value > value + ACCEPT_RTOL * max(1.0, abs(value)):
            y = x.copy()
            t = 1.0
        else:
            t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
            y = candidate + ((t - 1.0) / t_next) * (candidate - x)
            x = candidate
            t = t_next
            value = min(value, candidate_value)
            trace.append(value)
        if iteration % CHECK_EVERY == 0:
            gap = _gap(matrix, x)
            logger.debug(
                "oracle iteration %d: objective %.12g gap %.3e", iteration, value, gap
            )
    gap = _gap(matrix, x)
    energy = matrix.energy(x)
    robin = energy - float(matrix.q @ x)
    logger.info(
        "Oracle converged on %d points after %d iterations (energy %.10g)",
        n,
        iteration,
        energy,
    )
    return DiscreteMeasure(
        weights=x,
        energy=energy,
        robin_constant=robin,
        iterations=iteration,
        gap=gap,
        trace=np.asarray(trace),
    )


def bridge_runs(
    runs: List[Tuple[int, int]], n: int, bridge: int
) -> List[Tuple[int, int]]:
    """Merge circular runs separated by at most ``bridge`` uncharged nodes."""
    if not runs:
        return []
    merged = [runs[0]]
    for first, last in runs[1:]:
        if first - merged[-1][1] - 1 <= bridge:
            merged[-1] = (merged[-1][0], last)
        else:
            merged.append((first, last))
    if len(merged) > 1 and merged[0][0] + n - merged[-1][1] - 1 <= bridge:
        head = merged.pop(0)
        tail = merged.pop()
        merged.append((tail[0], head[1] + n))
    if len(merged) == 1 and n - (merged[0][1] - merged[0][0] + 1) <= bridge:
        return [(0, n - 1)]
    return merged


def extract_support(
    measure: DiscreteMeasure,
    threshold: float = 1e-3,
    *,
    bridge: int = 2,
    con: Optional[duckdb.DuckDBPyConnection] = None,
) -> ArcSet:
    """Arcs around the runs of nodes carrying more than threshold / N.

    Holes of up to ``bridge`` nodes inside a run are closed first.
    """
    mask = measure.weights > threshold / measure.size
    if not np.any(mask):
        raise ArcError(
            f"Empty support: no weight exceeds {threshold:g}/N.", stage="oracle"
        )
    runs = tb.circular_runs(tb.resolve_connection(con), mask)
    return arcs_from_runs(bridge_runs(runs, measure.size, bridge), measure.size)


@dataclass(frozen=True)
class ExtrapolatedEnergy:
    fine: float
    coarse: float
    extrapolated: float


def extrapolated_energy(
    field: ExternalField,
    n: int = 4096,
    *,
    tol: float = 1e-5,
    max_iter: int = 50_000,
) -> ExtrapolatedEnergy:
    """Energies on N and N/2 points combined as 2 V_N - V_{N/2}."""
    fine = minimize_energy(field, n, tol=tol, max_iter=max_iter).energy
    coarse = minimize_energy(field, n // 2, tol=tol, max_iter=max_iter).energy
    return ExtrapolatedEnergy(fine, coarse, 2.0 * fine - coarse)
