from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any, Dict, Optional

import duckdb
import numpy as np

from . import _tables as tb
from ._arcs import TWO_PI, ArcSet
from ._exceptions import EquilibriumError
from ._field import ExternalField
from ._measures import DensityProfile
from ._types import TableConn

if TYPE_CHECKING:  # pragma: no cover
    from ._support import SupportSolveReport
    from ._verify import ResidualReport


class EquilibriumSolution:
    """Equilibrium measure of a weighted problem on the unit circle.

    Holds the support, the sampled density and the constants F_w (Robin
    constant), V_w (minimal weighted energy) and cap(T, w) = exp(-V_w).
    Tabular views come back as DuckDB relations on the solution's
    connection.
    """

    def __init__(
        self,
        *,
        connection: TableConn,
        field: ExternalField,
        support: ArcSet,
        profile: DensityProfile,
        robin_constant: float,
        q_integral: float,
        variation: float,
        materialize: bool = False,
        report: Optional["ResidualReport"] = None,
        support_report: Optional["SupportSolveReport"] = None,
    ) -> None:
        self.connection = connection
        self.field = field
        self.support = support
        self.profile = profile
        self.robin_constant = robin_constant
        self.q_integral = q_integral
        self.variation = variation
        self.report = report
        self.support_report = support_report
        self._materialize = materialize
        self._closed = False

    @property
    def energy(self) -> float:
        """V_w = F_w + int Q dmu_w."""
        return self.robin_constant + self.q_integral

    @property
    def capacity(self) -> float:
        return math.exp(-self.energy)

    @property
    def k(self) -> int:
        return 0 if self.support.is_full else self.support.k

    @property
    def passed(self) -> bool:
        return self.report is not None and self.report.passed

    def total_potential(self, theta: Any) -> Any:
        """U + Q at ``theta``."""
        from ._verify import total_potential

        values = total_potential(self.field, self.profile, theta)
        if np.ndim(theta) == 0:
            return float(values[0])
        return values

    def summary(self) -> duckdb.DuckDBPyRelation:
        """Return the solution constants as a (quantity, value) relation.

        Examples
        --------
        >>> from equilibria import examples, full_report
        >>> solution = full_report(examples.uniform_weight())
        >>> round(solution.capacity, 10)
        1.0
        >>> solution.summary().columns
        ['quantity', 'value']
        """
        rows = [
            ("arcs", float(self.k)),
            ("robin_constant", self.robin_constant),
            ("energy", self.energy),
            ("capacity", self.capacity),
            ("q_integral", self.q_integral),
            ("variation", self.variation),
        ]
        return tb.build_rows_relation(
            self.connection,
            rows,
            [("quantity", "VARCHAR"), ("value", "DOUBLE")],
            self._materialize,
        )

    def residuals(self) -> duckdb.DuckDBPyRelation:
        """Return the verification residuals with their tolerances."""
        if self.report is None:
            raise EquilibriumError(
                "No residual report; run `residual_report` first.", stage="verify"
            )
        return tb.build_rows_relation(
            self.connection,
            self.report.rows(),
            [
                ("residual", "VARCHAR"),
                ("value", "DOUBLE"),
                ("tolerance", "DOUBLE"),
                ("passed", "BOOLEAN"),
            ],
            self._materialize,
        )

    def density(self) -> duckdb.DuckDBPyRelation:
        """Return (theta, f) in ascending theta with zeros at arc endpoints."""
        return self.profile.to_relation(self.connection, materialize=self._materialize)

    def potential(self, grid: int = 4096) -> duckdb.DuckDBPyRelation:
        """Return (theta, total) with total = U + Q on a uniform grid."""
        theta = TWO_PI * np.arange(grid) / grid
        total = self.total_potential(theta)
        return tb.build_columns_relation(
            self.connection,
            [theta, total],
            [("theta", "DOUBLE"), ("total", "DOUBLE")],
            self._materialize,
        )

    def to_json(self) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "solution": {
                "arcs": self.support.to_json(),
                "k": self.k,
                "robin_constant": self.robin_constant,
                "energy": self.energy,
                "capacity": self.capacity,
                "q_integral": self.q_integral,
                "variation": self.variation,
            },
            "field": self.field.to_json(),
            "profile": self.profile.to_json(),
        }
        if self.report is not None:
            document.update(self.report.to_dict())
        if self.support_report is not None:
            document["support_solve"] = self.support_report.to_json()
        return document

    def close(self) -> None:
        """Drop temp tables created for materialized relations."""
        if self._closed:
            return
        tb.drop_temp_tables(self.connection)
        self._closed = True

    def __del__(self) -> None:  # pragma: no cover
        try:
            self.close()
        except Exception:
            pass

    def __repr__(self) -> str:
        status = "unverified" if self.report is None else (
            "passed" if self.report.passed else "failed"
        )
        return (
            f"EquilibriumSolution(support={self.support!r}, "
            f"F_w={self.robin_constant:.10g}, V_w={self.energy:.10g}, "
            f"capacity={self.capacity:.10g}, {status})"
        )
