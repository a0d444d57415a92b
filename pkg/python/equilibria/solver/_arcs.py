from __future__ import annotations

import math
from typing import Any, Iterable, List, Sequence, Tuple

import numpy as np

from ._exceptions import ArcError
from ._types import Angles, FloatArray

TWO_PI = 2.0 * math.pi


def canonical_angle(theta: Angles) -> Any:
    """Reduce angles to [0, 2 pi)."""
    reduced = np.mod(theta, TWO_PI)
    return np.where(reduced >= TWO_PI, 0.0, reduced)


class ArcSet:
    """Ordered arcs [alpha_k, beta_k] of the unit circle.

    Endpoints are unwrapped so that alpha_1 lies in [0, 2 pi) and
    alpha_1 < beta_1 < alpha_2 < ... < beta_K < alpha_1 + 2 pi. The full
    circle is a distinguished value with no endpoints.
    """

    def __init__(self, endpoints: Any, *, full: bool = False) -> None:
        if full:
            self._endpoints = np.zeros((0, 2))
            self.is_full = True
            return
        ends = np.asarray(endpoints, dtype=float).reshape(-1, 2)
        if ends.shape[0] == 0:
            raise ArcError("An arc set needs at least one arc.")
        if not np.all(np.isfinite(ends)):
            raise ArcError("Arc endpoints must be finite.")
        flat = ends.reshape(-1)
        if np.any(np.diff(flat) <= 0):
            raise ArcError(
                "Arc endpoints must satisfy alpha_1 < beta_1 < ... < beta_K."
            )
        if flat[-1] - flat[0] >= TWO_PI:
            raise ArcError("Arcs overlap: beta_K - alpha_1 must be below 2 pi.")
        shift = math.floor(flat[0] / TWO_PI) * TWO_PI
        self._endpoints = ends - shift
        self.is_full = False

    @classmethod
    def full_circle(cls) -> "ArcSet":
        return cls(None, full=True)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "ArcSet":
        """Canonicalize arbitrary (alpha, beta) pairs, each read counterclockwise."""
        arcs: List[Tuple[float, float]] = []
        for pair in pairs:
            if len(pair) != 2:
                raise ArcError("Each arc needs exactly two endpoints.")
            start = float(canonical_angle(float(pair[0])))
            length = float(np.mod(float(pair[1]) - float(pair[0]), TWO_PI))
            if length <= 0.0:
                raise ArcError("Arcs must have positive length.")
            arcs.append((start, length))
        if not arcs:
            raise ArcError("An arc set needs at least one arc.")
        arcs.sort()
        ends = [(start, start + length) for start, length in arcs]
        return cls(ends)

    @property
    def endpoints(self) -> FloatArray:
        return self._endpoints.copy()

    @property
    def k(self) -> int:
        return int(self._endpoints.shape[0])

    @property
    def alphas(self) -> FloatArray:
        return self._endpoints[:, 0].copy()

    @property
    def betas(self) -> FloatArray:
        return self._endpoints[:, 1].copy()

    @property
    def midpoints(self) -> FloatArray:
        return self._endpoints.mean(axis=1)

    @property
    def halfwidths(self) -> FloatArray:
        return (self._endpoints[:, 1] - self._endpoints[:, 0]) / 2.0

    @property
    def a(self) -> np.ndarray:
        return np.exp(1j * self.alphas)

    @property
    def b(self) -> np.ndarray:
        return np.exp(1j * self.betas)

    def as_vector(self) -> FloatArray:
        return self._endpoints.reshape(-1).copy()

    def gaps(self) -> FloatArray:
        """Complementary arcs (beta_k, alpha_{k+1}), closing with alpha_1 + 2 pi."""
        if self.is_full:
            return np.zeros((0, 2))
        nxt = np.append(self.alphas[1:], self.alphas[0] + TWO_PI)
        return np.column_stack([self.betas, nxt])

    def measure(self) -> float:
        if self.is_full:
            return TWO_PI
        return float(np.sum(2.0 * self.halfwidths))

    def locate(self, theta: Angles) -> Tuple[np.ndarray, FloatArray]:
        """Arc index (-1 when outside) and the angle unwrapped into that arc."""
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        index = np.full(t.shape, -1, dtype=int)
        unwrapped = t.copy()
        for k, (alpha, beta) in enumerate(self._endpoints):
            offset = np.mod(t - alpha, TWO_PI)
            inside = offset <= beta - alpha
            index = np.where(inside, k, index)
            unwrapped = np.where(inside, alpha + offset, unwrapped)
        return index, unwrapped

    def contains(self, theta: Angles) -> np.ndarray:
        if self.is_full:
            return np.ones(np.shape(np.atleast_1d(theta)), dtype=bool)
        index, _ = self.locate(theta)
        return index >= 0

    def endpoint_distance(self, theta: Angles) -> FloatArray:
        """Angular distance to the nearest endpoint."""
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.is_full:
            return np.full(t.shape, np.inf)
        ends = self._endpoints.reshape(-1)
        diff = np.mod(t[:, None] - ends[None, :] + math.pi, TWO_PI) - math.pi
        return np.min(np.abs(diff), axis=1)

    def rotated(self, theta0: float) -> "ArcSet":
        if self.is_full:
            return self
        return ArcSet.from_pairs(self._endpoints + theta0)

    def widened(self, factor: float) -> "ArcSet":
        """Scale every arc about its midpoint."""
        if self.is_full:
            return self
        mid = self.midpoints
        half = self.halfwidths * factor
        return ArcSet(np.column_stack([mid - half, mid + half]))

    def pairs(self) -> List[Tuple[float, float]]:
        return [(float(a), float(b)) for a, b in self._endpoints]

    def to_json(self) -> Any:
        if self.is_full:
            return "full"
        return [[a, b] for a, b in self.pairs()]

    @classmethod
    def from_json(cls, value: Any) -> "ArcSet":
        if value == "full":
            return cls.full_circle()
        return cls(value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ArcSet):
            return NotImplemented
        if self.is_full or other.is_full:
            return self.is_full and other.is_full
        return self.k == other.k and bool(
            np.array_equal(self._endpoints, other._endpoints)
        )

    def __repr__(self) -> str:
        if self.is_full:
            return "ArcSet(full circle)"
        arcs = ", ".join(f"[{a:.6f}, {b:.6f}]" for a, b in self.pairs())
        return f"ArcSet(K={self.k}: {arcs})"


def parse_arcs(text: str) -> ArcSet:
    """Parse ``"a1,b1;a2,b2"`` into an ArcSet."""
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [part.strip() for part in chunk.split(",")]
        if len(parts) != 2:
            raise ArcError(f"Arc `{chunk}` must be written as `alpha,beta`.")
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ArcError(f"Arc `{chunk}` has a non-numeric endpoint.") from exc
    return ArcSet.from_pairs(pairs)


def arcs_from_runs(runs: Sequence[Tuple[int, int]], n: int) -> ArcSet:
    """Arcs covering grid runs on theta_i = 2 pi i / n, half a step past each end."""
    if not runs:
        raise ArcError("Empty support: no grid point passed the threshold.")
    if len(runs) == 1 and runs[0][1] - runs[0][0] + 1 >= n:
        return ArcSet.full_circle()
    step = TWO_PI / n
    pairs = [((first - 0.5) * step, (last + 0.5) * step) for first, last in runs]
    return ArcSet.from_pairs(pairs)
