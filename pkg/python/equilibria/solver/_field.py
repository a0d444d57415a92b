from __future__ import annotations

import abc
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ._exceptions import FieldError
from ._types import Angles, FloatArray, RealFunction


ON_CIRCLE_TOL = 1e-12
ZERO_HIT_TOL = 1e-15


def as_angles(theta: Angles) -> FloatArray:
    return np.atleast_1d(np.asarray(theta, dtype=float))


def _like_input(theta: Angles, values: np.ndarray) -> Any:
    if np.ndim(theta) == 0:
        return values.reshape(-1)[0].item()
    return values


class ExternalField(abc.ABC):
    """External field Q = -log w on the unit circle.

    Subclasses evaluate Q, Q' and Q'' at angles (scalars or arrays) and
    expose the right-hand side g of the dominant singular equation.
    """

    kind: str = ""

    @property
    def has_second_derivative(self) -> bool:
        return True

    def q(self, theta: Angles) -> Any:
        return _like_input(theta, self._q(as_angles(theta)))

    def q_prime(self, theta: Angles) -> Any:
        return _like_input(theta, self._q_prime(as_angles(theta)))

    def q_second(self, theta: Angles) -> Any:
        if not self.has_second_derivative:
            raise FieldError("Field has no second derivative evaluator.")
        return _like_input(theta, self._q_second(as_angles(theta)))

    def g(self, theta: Angles) -> Any:
        """Right-hand side g(e^{it}) = (i/pi) Q'(t) + 1/(2 pi)."""
        return _like_input(theta, self._g(as_angles(theta)))

    def _g(self, theta: FloatArray) -> np.ndarray:
        return generic_g(self, theta)

    def validate_for_solve(self) -> None:
        """Raise if the field cannot be handed to the solver."""

    @abc.abstractmethod
    def _q(self, theta: FloatArray) -> FloatArray: ...

    @abc.abstractmethod
    def _q_prime(self, theta: FloatArray) -> FloatArray: ...

    @abc.abstractmethod
    def _q_second(self, theta: FloatArray) -> FloatArray: ...

    @abc.abstractmethod
    def rotated(self, theta0: float) -> "ExternalField":
        """Field with Q(theta - theta0)."""

    @abc.abstractmethod
    def to_json(self) -> Dict[str, Any]: ...


def generic_g(field: ExternalField, theta: Angles) -> np.ndarray:
    t = as_angles(theta)
    return 1j / math.pi * field._q_prime(t) + 1.0 / (2.0 * math.pi)


class PolynomialWeight(ExternalField):
    """Weight w(z) = prod |z - z_j|^{lambda_j}."""

    kind = "polynomial"

    def __init__(self, terms: Sequence[Tuple[complex, float]]) -> None:
        if len(terms) == 0:
            raise FieldError("`terms` must contain at least one zero.")
        zeros = np.array([complex(zero) for zero, _ in terms], dtype=complex)
        exponents = np.array([float(lam) for _, lam in terms], dtype=float)
        if np.any(~np.isfinite(zeros)) or np.any(~np.isfinite(exponents)):
            raise FieldError("`terms` must be finite.")
        if np.any(exponents <= 0):
            raise FieldError("Every exponent `lambda` must be positive.")
        if np.any(zeros == 0):
            raise FieldError("Zeros of the weight must differ from the origin.")
        self.zeros = zeros
        self.exponents = exponents

    @property
    def terms(self) -> List[Tuple[complex, float]]:
        return [(complex(z), float(lam)) for z, lam in zip(self.zeros, self.exponents)]

    @property
    def total_exponent(self) -> float:
        return float(self.exponents.sum())

    def zeros_on_circle(self) -> np.ndarray:
        return np.abs(np.abs(self.zeros) - 1.0) < ON_CIRCLE_TOL

    def validate_for_solve(self) -> None:
        if np.any(self.zeros_on_circle()):
            raise FieldError(
                "Zeros of the weight on the unit circle are not supported "
                "by the solver.",
                stage="field",
            )

    def _distances(self, theta: FloatArray) -> np.ndarray:
        diff = np.exp(1j * theta)[:, None] - self.zeros[None, :]
        dist = np.abs(diff)
        if np.any(dist < ZERO_HIT_TOL):
            raise FieldError("Field is +inf here: evaluation at a zero of the weight.")
        return dist

    def _q(self, theta: FloatArray) -> FloatArray:
        dist = self._distances(theta)
        return -(np.log(dist) @ self.exponents)

    def _q_prime(self, theta: FloatArray) -> FloatArray:
        dist2 = self._distances(theta) ** 2
        r = np.abs(self.zeros)
        x = theta[:, None] - np.angle(self.zeros)[None, :]
        return -((r * np.sin(x) / dist2) @ self.exponents)

    def _q_second(self, theta: FloatArray) -> FloatArray:
        dist2 = self._distances(theta) ** 2
        r = np.abs(self.zeros)
        x = theta[:, None] - np.angle(self.zeros)[None, :]
        num = r * (1.0 + r**2) * np.cos(x) - 2.0 * r**2
        return -((num / dist2**2) @ self.exponents)

    def _g(self, theta: FloatArray) -> np.ndarray:
        zeta = np.exp(1j * theta)[:, None]
        self._distances(theta)
        reflected = 1.0 / np.conj(self.zeros)
        terms = self.exponents * (
            self.zeros / (zeta - self.zeros) + reflected / (zeta - reflected)
        )
        return (1.0 + self.total_exponent + terms.sum(axis=1)) / (2.0 * math.pi)

    def full_circle_density(self, theta: FloatArray) -> FloatArray:
        dist2 = self._distances(theta) ** 2
        spread = np.abs(np.abs(self.zeros) ** 2 - 1.0)
        return (1.0 + self.total_exponent - (spread / dist2) @ self.exponents) / (
            2.0 * math.pi
        )

    def rotated(self, theta0: float) -> "PolynomialWeight":
        turn = np.exp(1j * theta0)
        return PolynomialWeight(list(zip(self.zeros * turn, self.exponents)))

    def to_json(self) -> Dict[str, Any]:
        return {
            "type": "polynomial",
            "terms": [
                {"zero": [z.real, z.imag], "lambda": lam} for z, lam in self.terms
            ],
        }

    def __repr__(self) -> str:
        return f"PolynomialWeight(terms={self.terms!r})"


class TrigExponentialWeight(ExternalField):
    """Weight w(e^{it}) = exp(-t(theta)) with t a real trigonometric polynomial.

    ``coefficients`` maps m to c_m. Entries for negative m are filled in by
    conjugate symmetry when absent and checked when present.
    """

    kind = "trig"

    def __init__(self, coefficients: Mapping[int, complex]) -> None:
        given = {int(m): complex(c) for m, c in coefficients.items()}
        degree = max((abs(m) for m in given), default=0)
        coeffs = np.zeros(2 * degree + 1, dtype=complex)
        for m, c in given.items():
            partner = given.get(-m)
            if partner is not None and abs(partner - np.conj(c)) > 1e-12 * (
                1.0 + abs(c)
            ):
                raise FieldError(
                    f"Coefficients for m={m} and m={-m} are not conjugate; "
                    "t(theta) would not be real."
                )
            coeffs[m + degree] = c
            coeffs[-m + degree] = np.conj(c)
        if abs(coeffs[degree].imag) > 1e-14:
            raise FieldError("The constant coefficient `c_0` must be real.")
        coeffs[degree] = coeffs[degree].real
        self.degree = degree
        self.coeffs = coeffs
        self.modes = np.arange(-degree, degree + 1)

    def coefficient(self, m: int) -> complex:
        if abs(m) > self.degree:
            return 0j
        return complex(self.coeffs[m + self.degree])

    def _series(self, theta: FloatArray, weights: np.ndarray) -> np.ndarray:
        phases = np.exp(1j * np.outer(theta, self.modes))
        return phases @ (weights * self.coeffs)

    def _q(self, theta: FloatArray) -> FloatArray:
        return self._series(theta, np.ones(self.modes.size)).real

    def _q_prime(self, theta: FloatArray) -> FloatArray:
        return self._series(theta, 1j * self.modes).real

    def _q_second(self, theta: FloatArray) -> FloatArray:
        return self._series(theta, -(self.modes**2).astype(float)).real

    def imag_part(self, theta: Angles) -> FloatArray:
        return self._series(as_angles(theta), np.ones(self.modes.size)).imag

    def _g(self, theta: FloatArray) -> np.ndarray:
        return 1.0 / (2.0 * math.pi) - self._series(
            theta, self.modes.astype(float)
        ) / math.pi

    def full_circle_density(self, theta: FloatArray) -> FloatArray:
        weights = np.abs(self.modes).astype(float)
        return 1.0 / (2.0 * math.pi) - self._series(theta, weights).real / math.pi

    def rotated(self, theta0: float) -> "TrigExponentialWeight":
        shifted = self.coeffs * np.exp(-1j * self.modes * theta0)
        return TrigExponentialWeight(
            {int(m): complex(c) for m, c in zip(self.modes, shifted) if m >= 0}
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "type": "trig",
            "coeffs": [
                {"m": int(m), "c": [c.real, c.imag]}
                for m, c in zip(self.modes, self.coeffs)
                if m >= 0
            ],
        }

    def __repr__(self) -> str:
        return f"TrigExponentialWeight(degree={self.degree})"


class SampledField(ExternalField):
    """Field given by evaluators for Q, Q' and optionally Q''."""

    kind = "sampled"

    def __init__(
        self,
        q: RealFunction,
        q_prime: RealFunction,
        q_second: Optional[RealFunction] = None,
        *,
        grid: Optional[FloatArray] = None,
    ) -> None:
        self._q_fn = q
        self._q_prime_fn = q_prime
        self._q_second_fn = q_second
        self.grid = grid

    @classmethod
    def from_grid(cls, values: Sequence[float]) -> "SampledField":
        """Trigonometric interpolant of Q sampled at theta_i = 2 pi i / N."""
        samples = np.asarray(values, dtype=float)
        n = samples.size
        if n < 4:
            raise FieldError("`grid` must hold at least 4 samples.")
        if not np.all(np.isfinite(samples)):
            raise FieldError("`grid` values must be finite.")
        coeffs = np.fft.fft(samples) / n
        modes = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            # Nyquist term is split evenly so the interpolant stays real
            coeffs = np.append(coeffs, coeffs[n // 2] / 2.0)
            coeffs[n // 2] /= 2.0
            modes = np.append(modes, n // 2)
            modes[n // 2] = -(n // 2)

        def series(power: int) -> RealFunction:
            weights = (1j * modes) ** power * coeffs

            def evaluate(theta: FloatArray) -> FloatArray:
                phases = np.exp(1j * np.outer(np.atleast_1d(theta), modes))
                return (phases @ weights).real

            return evaluate

        return cls(series(0), series(1), series(2), grid=samples)

    @property
    def has_second_derivative(self) -> bool:
        return self._q_second_fn is not None

    def _q(self, theta: FloatArray) -> FloatArray:
        return np.asarray(self._q_fn(theta), dtype=float)

    def _q_prime(self, theta: FloatArray) -> FloatArray:
        return np.asarray(self._q_prime_fn(theta), dtype=float)

    def _q_second(self, theta: FloatArray) -> FloatArray:
        if self._q_second_fn is None:
            raise FieldError("Field has no second derivative evaluator.")
        return np.asarray(self._q_second_fn(theta), dtype=float)

    def rotated(self, theta0: float) -> "SampledField":
        q_second = self._q_second_fn
        return SampledField(
            lambda t: self._q_fn(np.asarray(t) - theta0),
            lambda t: self._q_prime_fn(np.asarray(t) - theta0),
            None if q_second is None else (lambda t: q_second(np.asarray(t) - theta0)),
        )

    def to_json(self) -> Dict[str, Any]:
        if self.grid is None:
            raise FieldError("Only grid-sampled fields can be serialized.")
        return {"type": "sampled", "grid": [float(v) for v in self.grid]}

    def __repr__(self) -> str:
        size = None if self.grid is None else self.grid.size
        return f"SampledField(grid={size})"


def exponential_weight(c: float) -> TrigExponentialWeight:
    """Weight |exp(-c z)| on the circle, i.e. t(theta) = c cos(theta)."""
    return TrigExponentialWeight({1: c / 2.0})


def uniform_field() -> TrigExponentialWeight:
    """The field of w = 1."""
    return TrigExponentialWeight({0: 0.0})


def field_from_json(document: Mapping[str, Any]) -> ExternalField:
    """Build a field from its JSON description."""
    if not isinstance(document, Mapping):
        raise FieldError("Field description must be a JSON object.")
    kind = document.get("type")
    try:
        if kind == "polynomial":
            terms = [
                (complex(float(t["zero"][0]), float(t["zero"][1])), float(t["lambda"]))
                for t in document["terms"]
            ]
            return PolynomialWeight(terms)
        if kind == "trig":
            given: Dict[int, complex] = {}
            for entry in document["coeffs"]:
                m = int(entry["m"])
                c = complex(float(entry["c"][0]), float(entry["c"][1]))
                if m < 0:
                    raise FieldError("Trig coefficients are given for m >= 0 only.")
                given[m] = c
            return TrigExponentialWeight(given)
        if kind == "sampled":
            return SampledField.from_grid(document["grid"])
    except (KeyError, IndexError, TypeError) as exc:
        raise FieldError(f"Malformed `{kind}` field description: {exc}") from exc
    raise FieldError("Field `type` must be one of: 'polynomial', 'trig', 'sampled'")


def eval_q(field: ExternalField, theta: Angles) -> Any:
    return field.q(theta)


def eval_q_prime(field: ExternalField, theta: Angles) -> Any:
    return field.q_prime(theta)


def eval_g(field: ExternalField, theta: Angles) -> Any:
    return field.g(theta)
