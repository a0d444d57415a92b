from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from numpy.polynomial import polynomial as P

from ._arcs import ArcSet
from ._branch import SqrtRBranch
from ._exceptions import ArcError


def inverse_sqrt_series(coefficients: Any, terms: int) -> np.ndarray:
    """Taylor coefficients of p(x)^(-1/2) for a power series with p(0) = 1."""
    p = np.zeros(max(terms, len(coefficients)), dtype=complex)
    p[: len(coefficients)] = coefficients
    out = np.zeros(terms, dtype=complex)
    out[0] = 1.0
    alpha = -0.5
    for n in range(1, terms):
        j = np.arange(1, n + 1)
        out[n] = np.sum(((alpha + 1.0) * j - n) * p[j] * out[n - j]) / n
    return out


@dataclass(frozen=True)
class CoefficientTables:
    """Laurent data of 1 / (sqrt(R(zeta)) (zeta - z)) at 0 and at infinity.

    ``at_zero[n]`` holds the Taylor coefficients of sqrt(R(0)) / sqrt(R(zeta))
    and ``at_infinity[n]`` those of 1 / sqrt(u^{2K} R(1/u)) in u = 1/zeta.
    """

    support: ArcSet
    up_to: int
    root_at_zero: complex
    at_zero: np.ndarray
    at_infinity: np.ndarray

    @property
    def k(self) -> int:
        return self.support.k

    def r_coefficients(self, index: int) -> np.ndarray:
        """r_index as ascending coefficients in w = 1/z (degree index + 1)."""
        if index < 0:
            raise ArcError("`index` must be nonnegative.")
        self._require(index)
        coeffs = np.zeros(index + 2, dtype=complex)
        # coefficient of w^{index - j + 1} is -a_j / sqrt(R(0))
        for j in range(index + 1):
            coeffs[index - j + 1] = -self.at_zero[j] / self.root_at_zero
        return coeffs

    def s_coefficients(self, index: int) -> np.ndarray:
        """s_index as ascending coefficients in z; zero for index <= K."""
        shift = index - self.k - 1
        if shift < 0:
            return np.zeros(1, dtype=complex)
        self._require(shift)
        return self.at_infinity[shift::-1][: shift + 1].copy()

    def r(self, index: int, z: Any) -> Any:
        return P.polyval(1.0 / np.asarray(z, dtype=complex), self.r_coefficients(index))

    def s(self, index: int, z: Any) -> Any:
        return P.polyval(np.asarray(z, dtype=complex), self.s_coefficients(index))

    def expansion_at_zero(self, zeta: complex, z: Any, terms: int) -> Any:
        return sum(self.r(k, z) * zeta**k for k in range(terms))

    def expansion_at_infinity(self, zeta: complex, z: Any, terms: int) -> Any:
        return sum(self.s(k, z) * zeta ** (-k) for k in range(self.k + 1, terms))

    def _require(self, n: int) -> None:
        if n >= self.at_zero.size:
            raise ArcError(
                f"Coefficient tables hold {self.at_zero.size} terms; "
                f"index {n} requested."
            )


def build_coefficient_tables(
    support: ArcSet, up_to: int, *, branch: Optional[SqrtRBranch] = None
) -> CoefficientTables:
    """Power-series recursion for r_0..r_{up_to - 1} and s_{K+1}..s_{up_to + 1}.

    Both expansions come from the power-series recurrence for the inverse
    square root of the normalized polynomial, composed with the geometric
    series in z.
    """
    if support.is_full:
        raise ArcError("Coefficient tables need proper arcs.")
    if up_to < support.k:
        raise ArcError(f"`up_to` must be at least K = {support.k}.")
    branch = branch if branch is not None else SqrtRBranch(support)
    roots = np.concatenate([support.a, support.b])
    ascending = P.polyfromroots(roots)
    terms = 2 * up_to + 4 * support.k + 8
    root_at_zero = complex(branch.offcut(0j))
    at_zero = inverse_sqrt_series(ascending / ascending[0], terms)
    # u^{2K} R(1/u) reverses the coefficient order; its constant term is 1
    at_infinity = inverse_sqrt_series(ascending[::-1] / ascending[-1], terms)
    return CoefficientTables(support, up_to, root_at_zero, at_zero, at_infinity)
