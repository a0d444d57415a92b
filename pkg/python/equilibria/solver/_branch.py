from __future__ import annotations

import math
from typing import Any, Tuple

import numpy as np

from ._arcs import ArcSet
from ._exceptions import ArcError
from ._measures import sinc_pair
from ._types import Angles, ComplexArray, FloatArray

CUT_GUARD = 1e-13
ENDPOINT_GUARD = 1e-14
ANCHOR_RADIUS = 1.0 - 1e-6


class SqrtRBranch:
    """Branch of sqrt(R(z)), R(z) = prod (z - a_k)(z - b_k), analytic off the arcs.

    Each factor sqrt((z - a_k)(z - b_k)) is built from a Moebius map that
    sends arc k onto the negative real axis, so the principal square root
    has its cut exactly on the arc. The factor is normalized to behave
    like z at infinity; the product then behaves like z^K. Boundary values
    on an arc use a half-angle closed form whose sign is anchored once per
    arc against the analytic factor at (1 - 1e-6) e^{i m_k}.
    """

    def __init__(self, arcs: ArcSet) -> None:
        if arcs.is_full:
            raise ArcError("The full circle has no square-root branch.")
        self.arcs = arcs
        self._a = arcs.a
        self._b = arcs.b
        mid = np.exp(1j * arcs.midpoints)
        opening = np.angle((mid - self._a) / (mid - self._b))
        self._turn = np.exp(-1j * (opening - math.pi))
        self._half_turn = np.sqrt(np.conj(self._turn))
        self._sign = np.ones(arcs.k)
        far = 1e6 * np.exp(1j * (arcs.midpoints + math.pi))
        for k in range(arcs.k):
            value = self._raw_factor(k, np.array([far[k]]))[0] / far[k]
            self._sign[k] = 1.0 if value.real >= 0 else -1.0
        self._orientation = np.ones(arcs.k)
        for k in range(arcs.k):
            anchor = ANCHOR_RADIUS * mid[k]
            analytic = self._factor(k, np.array([anchor]))[0]
            closed = self._closed_factor(k, np.array([arcs.midpoints[k]]))[0]
            self._orientation[k] = 1.0 if (analytic / closed).real >= 0 else -1.0

    @property
    def k(self) -> int:
        return self.arcs.k

    def _raw_factor(self, k: int, z: ComplexArray) -> ComplexArray:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (z - self._a[k]) / (z - self._b[k]) * self._turn[k]
            value = (z - self._b[k]) * self._half_turn[k] * np.sqrt(ratio)
        return np.where(z == self._b[k], 0.0, value)

    def _factor(self, k: int, z: ComplexArray) -> ComplexArray:
        return self._sign[k] * self._raw_factor(k, z)

    def _closed_factor(self, k: int, theta: FloatArray) -> ComplexArray:
        """Inside boundary value of factor k up to sign."""
        alpha, beta = self.arcs.endpoints[k]
        product = np.sin((theta - alpha) / 2.0) * np.sin((beta - theta) / 2.0)
        root = np.sqrt(np.clip(product, 0, None))
        phase = np.exp(1j * (theta / 2.0 + (alpha + beta) / 4.0))
        return 2.0 * phase * root

    def _others(self, k: int, z: ComplexArray) -> ComplexArray:
        out = np.ones(z.shape, dtype=complex)
        for j in range(self.k):
            if j != k:
                out = out * self._factor(j, z)
        return out

    def R(self, z: Any) -> Any:
        zz = np.asarray(z, dtype=complex)
        out = np.ones(zz.shape, dtype=complex)
        for a, b in zip(self._a, self._b):
            out = out * (zz - a) * (zz - b)
        return out

    def cut_distance(self, z: Any) -> FloatArray:
        """Distance from z to the union of the arcs."""
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        index, _ = self.arcs.locate(np.angle(zz))
        radial = np.abs(np.abs(zz) - 1.0)
        ends = np.min(
            np.abs(zz[:, None] - np.concatenate([self._a, self._b])[None, :]), axis=1
        )
        return np.where(index >= 0, np.minimum(radial, ends), ends)

    def offcut(self, z: Any) -> Any:
        """sqrt(R(z)) for z off the arcs, normalized by sqrt(R(z)) / z^K -> 1."""
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(self.cut_distance(zz) < CUT_GUARD):
            raise ArcError(
                "on-cut evaluation requested; use sqrtR_boundary", stage="circlemath"
            )
        out = np.ones(zz.shape, dtype=complex)
        for k in range(self.k):
            out = out * self._factor(k, zz)
        if np.ndim(z) == 0:
            return complex(out[0])
        return out

    def boundary(self, theta: Angles, *, side: str = "inside") -> Any:
        """Limit of sqrt(R) at e^{i theta} on an arc from inside or outside the disk."""
        if side not in {"inside", "outside"}:
            raise ArcError("`side` must be 'inside' or 'outside'.")
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        index, unwrapped = self.arcs.locate(t)
        if np.any(index < 0):
            raise ArcError("Boundary value requested off the support arcs.")
        if np.any(self.arcs.endpoint_distance(t) < ENDPOINT_GUARD):
            raise ArcError("endpoint singularity: sqrt(R) vanishes at arc endpoints.")
        out = np.zeros(t.shape, dtype=complex)
        for k in range(self.k):
            mask = index == k
            if not np.any(mask):
                continue
            tk = unwrapped[mask]
            out[mask] = (
                self._orientation[k]
                * self._closed_factor(k, tk)
                * self._others(k, np.exp(1j * tk))
            )
        if side == "outside":
            out = -out
        if np.ndim(theta) == 0:
            return complex(out[0])
        return out

    def on_arc(
        self, k: int, s: FloatArray
    ) -> Tuple[FloatArray, ComplexArray, ComplexArray]:
        """Angles, inside values of sqrt(R) and h sin(s) / sqrt(R) on an arc.

        Nodes sit at theta = m + h cos(s). The last array stays bounded at
        the endpoints and is the smooth weight of every arc integral against
        dtheta / sqrt(R).
        """
        m = float(self.arcs.midpoints[k])
        h = float(self.arcs.halfwidths[k])
        theta = m + h * np.cos(s)
        phase = np.exp(1j * (theta / 2.0 + m / 2.0))
        smooth = self._orientation[k] * phase * np.sqrt(sinc_pair(h, s))
        smooth = smooth * self._others(k, np.exp(1j * theta))
        root = smooth * h * np.sin(s)
        return theta, root, 1.0 / smooth

