from __future__ import annotations

import math
from typing import Any, Iterable, Optional, Sequence, Tuple

from ._exceptions import ConfigError
from ._quadrature import is_power_of_two

FORMATS = ("json", "csv")


def validate_grid(value: Any, label: str = "grid", *, minimum: int = 64) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"`{label}` must be an integer.", stage="config")
    if value < minimum or not is_power_of_two(value):
        raise ConfigError(
            f"`{label}` must be a power of two >= {minimum} (got {value}).",
            stage="config",
        )
    return value


def validate_positive(value: Any, label: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"`{label}` must be a number.", stage="config")
    number = float(value)
    if not math.isfinite(number) or number <= 0:
        raise ConfigError(f"`{label}` must be positive and finite.", stage="config")
    return number


def validate_count(value: Any, label: str, *, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(
            f"`{label}` must be an integer >= {minimum}.", stage="config"
        )
    return value


def validate_optional_count(value: Any, label: str) -> Optional[int]:
    if value is None:
        return None
    return validate_count(value, label)


def validate_formats(formats: Any) -> Tuple[str, ...]:
    if isinstance(formats, str) or not isinstance(formats, Sequence):
        raise ConfigError("`formats` must be a list of strings.", stage="config")
    unknown = [item for item in formats if item not in FORMATS]
    if unknown:
        raise ConfigError(
            f"`formats` must be drawn from: {', '.join(FORMATS)} "
            f"(got {', '.join(map(str, unknown))})",
            stage="config",
        )
    return tuple(dict.fromkeys(formats))


def reject_unknown_keys(
    keys: Iterable[str], allowed: Iterable[str], label: str
) -> None:
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ConfigError(
            f"`{label}` has unknown keys: {', '.join(extra)}", stage="config"
        )


def resolve_materialize(materialize: str) -> bool:
    if not isinstance(materialize, str) or materialize not in {"all", "none"}:
        raise ConfigError("`materialize` must be one of: 'all', 'none'", stage="config")
    return materialize == "all"
