"""Example fields and problem configurations for quick experimentation."""

from __future__ import annotations

from typing import Any, Dict

from .solver._field import (
    PolynomialWeight,
    TrigExponentialWeight,
    exponential_weight,
    uniform_field,
)


def uniform_weight() -> TrigExponentialWeight:
    """w = 1: the classical case with density 1/(2 pi) and capacity 1."""
    return uniform_field()


def single_zero(radius: float = 3.0, exponent: float = 1.0) -> PolynomialWeight:
    """w(z) = |z - radius|^exponent with the zero on the positive real axis.

    For exponent 1 the support is the whole circle when radius >= 3 and a
    single arc around pi otherwise.
    """
    return PolynomialWeight([(complex(radius), exponent)])


def cosine_field(c: float = 1.0) -> TrigExponentialWeight:
    """w = exp(-c cos theta); a single arc around pi once c > 1/2."""
    return exponential_weight(c)


def double_well(c: float = 1.0) -> TrigExponentialWeight:
    """w = exp(-c cos 2 theta), convex on two windows of the circle."""
    return TrigExponentialWeight({2: c / 2.0})


def example_config(name: str = "single_arc") -> Dict[str, Any]:
    """Return a JSON-ready problem config for the CLI."""
    fields = {
        "uniform": uniform_weight(),
        "full_circle": single_zero(3.0),
        "single_arc": single_zero(2.0),
        "cosine": cosine_field(1.0),
    }
    if name not in fields:
        raise KeyError(f"Unknown example `{name}`; choose from {', '.join(fields)}")
    return {"field": fields[name].to_json(), "solver": {}, "tolerances": {}}
