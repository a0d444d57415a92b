from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import duckdb
import numpy as np
from scipy.interpolate import BarycentricInterpolator

from . import _tables as tb
from ._arcs import TWO_PI, ArcSet
from ._exceptions import ArcError, EquilibriumError
from ._types import Angles, FloatArray


def cosine_nodes(n: int) -> FloatArray:
    """Midpoint nodes s_j = (j + 1/2) pi / n of the cosine stretch."""
    return (np.arange(n) + 0.5) * math.pi / n


def sinc_pair(halfwidth: float, s: FloatArray) -> FloatArray:
    """sinc(h cos^2(s/2)) * sinc(h sin^2(s/2)) with sinc(x) = sin(x)/x."""
    c2 = np.cos(s / 2.0) ** 2
    s2 = np.sin(s / 2.0) ** 2
    return np.sinc(halfwidth * c2 / math.pi) * np.sinc(halfwidth * s2 / math.pi)


def endpoint_root(arcs: ArcSet, k: int, theta: FloatArray) -> FloatArray:
    """sqrt(sin((theta - alpha)/2) sin((beta - theta)/2)) on arc k."""
    alpha, beta = arcs.endpoints[k]
    left = np.clip(np.sin((theta - alpha) / 2.0), 0.0, None)
    right = np.clip(np.sin((beta - theta) / 2.0), 0.0, None)
    return np.sqrt(left * right)


@dataclass(frozen=True)
class ArcSamples:
    """Samples of a density on one arc at the cosine nodes."""

    index: int
    s: FloatArray
    theta: FloatArray
    values: FloatArray
    reduced: FloatArray
    weights: FloatArray  # f(theta_j) * dtheta/ds * pi/n


@dataclass
class DensityProfile:
    """Equilibrium density sampled on its support.

    Proper arcs carry ``nodes`` samples each at theta = m + h cos(s_j);
    the full circle carries a uniform grid. ``imag_residual`` records the
    largest imaginary part seen while evaluating the density formula.
    """

    support: ArcSet
    theta: FloatArray
    values: FloatArray
    nodes: int
    imag_residual: float = 0.0
    _interpolants: Dict[int, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def on_arcs(
        cls,
        support: ArcSet,
        values: FloatArray,
        *,
        imag_residual: float = 0.0,
    ) -> "DensityProfile":
        """Wrap values given per arc in cosine-node order, shape (K, n)."""
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != support.k:
            raise ArcError("Density samples must have shape (K, nodes).")
        n = vals.shape[1]
        s = cosine_nodes(n)
        theta = support.midpoints[:, None] + support.halfwidths[:, None] * np.cos(s)
        return cls(support, theta, vals, n, float(imag_residual))

    @classmethod
    def on_circle(
        cls, values: FloatArray, *, imag_residual: float = 0.0
    ) -> "DensityProfile":
        vals = np.asarray(values, dtype=float).reshape(-1)
        theta = TWO_PI * np.arange(vals.size) / vals.size
        return cls(ArcSet.full_circle(), theta, vals, vals.size, float(imag_residual))

    @classmethod
    def from_function(
        cls,
        support: ArcSet,
        density: Callable[[FloatArray], FloatArray],
        nodes: int = 64,
    ) -> "DensityProfile":
        if support.is_full:
            theta = TWO_PI * np.arange(nodes) / nodes
            return cls.on_circle(density(theta))
        s = cosine_nodes(nodes)
        theta = support.midpoints[:, None] + support.halfwidths[:, None] * np.cos(s)
        values = np.vstack([density(row) for row in theta])
        return cls.on_arcs(support, values)

    @property
    def is_full(self) -> bool:
        return self.support.is_full

    def arc_samples(self, k: int) -> ArcSamples:
        h = float(self.support.halfwidths[k])
        s = cosine_nodes(self.nodes)
        theta = self.theta[k]
        values = self.values[k]
        root = endpoint_root(self.support, k, theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            reduced = np.where(root > 0, values / root, 0.0)
        weights = values * h * np.sin(s) * math.pi / self.nodes
        return ArcSamples(k, s, theta, values, reduced, weights)

    def min_value(self) -> float:
        return float(np.min(self.values))

    def mass(self) -> float:
        if self.is_full:
            return float(np.mean(self.values) * TWO_PI)
        return float(
            sum(self.arc_samples(k).weights.sum() for k in range(self.support.k))
        )

    def quadrature(self) -> Tuple[FloatArray, FloatArray]:
        """Nodes and weights with sum(u(theta) * w) ~ integral of u f dtheta."""
        if self.is_full:
            return self.theta, self.values * TWO_PI / self.nodes
        samples = [self.arc_samples(k) for k in range(self.support.k)]
        return (
            np.concatenate([sample.theta for sample in samples]),
            np.concatenate([sample.weights for sample in samples]),
        )

    def _interpolant(self, k: int) -> Any:
        if k not in self._interpolants:
            sample = self.arc_samples(k)
            self._interpolants[k] = BarycentricInterpolator(
                np.cos(sample.s), sample.reduced
            )
        return self._interpolants[k]

    def evaluate(self, theta: Angles) -> FloatArray:
        """Density at arbitrary angles; zero off the support."""
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.is_full:
            coeffs = np.fft.rfft(self.values) / self.nodes
            modes = np.arange(coeffs.size)
            scale = np.where((modes == 0) | (2 * modes == self.nodes), 1.0, 2.0)
            phases = np.exp(1j * np.outer(t, modes))
            return (phases @ (scale * coeffs)).real
        out = np.zeros(t.shape)
        index, unwrapped = self.support.locate(t)
        for k in range(self.support.k):
            mask = index == k
            if not np.any(mask):
                continue
            m = self.support.midpoints[k]
            h = self.support.halfwidths[k]
            x = np.clip((unwrapped[mask] - m) / h, -1.0, 1.0)
            root = endpoint_root(self.support, k, unwrapped[mask])
            out[mask] = self._interpolant(k)(x) * root
        return out

    def table(self) -> Tuple[FloatArray, FloatArray]:
        """Ascending (theta, f) with explicit zeros at arc endpoints."""
        if self.is_full:
            return self.theta.copy(), self.values.copy()
        thetas = []
        values = []
        for k, (alpha, beta) in enumerate(self.support.pairs()):
            thetas.append(np.concatenate([[alpha], self.theta[k][::-1], [beta]]))
            values.append(np.concatenate([[0.0], self.values[k][::-1], [0.0]]))
        return np.concatenate(thetas), np.concatenate(values)

    def to_relation(
        self,
        con: Optional[duckdb.DuckDBPyConnection] = None,
        *,
        materialize: bool = False,
    ) -> duckdb.DuckDBPyRelation:
        conn = tb.resolve_connection(con)
        theta, values = self.table()
        return tb.build_columns_relation(
            conn, [theta, values], [("theta", "DOUBLE"), ("f", "DOUBLE")], materialize
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "support": self.support.to_json(),
            "nodes": self.nodes,
            "theta": self.theta.reshape(-1).tolist(),
            "f": self.values.reshape(-1).tolist(),
            "imag_residual": self.imag_residual,
        }

    @classmethod
    def from_json(cls, document: Dict[str, Any]) -> "DensityProfile":
        try:
            support = ArcSet.from_json(document["support"])
            values = np.asarray(document["f"], dtype=float)
            imag = float(document.get("imag_residual", 0.0))
            if support.is_full:
                return cls.on_circle(values, imag_residual=imag)
            nodes = int(document["nodes"])
            return cls.on_arcs(
                support, values.reshape(support.k, nodes), imag_residual=imag
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise EquilibriumError(f"Malformed density profile: {exc}") from exc


@dataclass
class DiscreteMeasure:
    """Probability weights on the grid theta_i = 2 pi i / N."""

    weights: FloatArray
    energy: float = math.nan
    robin_constant: float = math.nan
    iterations: int = 0
    gap: float = math.nan
    trace: Optional[FloatArray] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def theta(self) -> FloatArray:
        return TWO_PI * np.arange(self.size) / self.size

    @property
    def density(self) -> FloatArray:
        return self.weights * self.size / TWO_PI

    def to_relation(
        self,
        con: Optional[duckdb.DuckDBPyConnection] = None,
        *,
        materialize: bool = False,
    ) -> duckdb.DuckDBPyRelation:
        conn = tb.resolve_connection(con)
        return tb.build_columns_relation(
            conn,
            [self.theta, self.weights],
            [("theta", "DOUBLE"), ("weight", "DOUBLE")],
            materialize,
        )

