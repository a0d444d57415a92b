from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:  # pragma: no cover
    from ._arcs import ArcSet


class EquilibriumError(ValueError):
    """Raised when solver inputs are invalid or a numerical stage fails."""

    def __init__(self, message: str, *, stage: Optional[str] = None) -> None:
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        message = super().__str__()
        if self.stage is None:
            return message
        return f"[{self.stage}] {message}"


class FieldError(EquilibriumError):
    """Raised for invalid weights or evaluation at a zero of the weight."""


class ArcError(EquilibriumError):
    """Raised for malformed arc sets and evaluations outside their domain."""


class QuadratureError(EquilibriumError):
    """Raised when node doubling does not settle within its budget."""


class NotFullCircleError(EquilibriumError):
    """Raised when the full-circle density turns negative."""

    def __init__(
        self, message: str, violations: "ArcSet", *, stage: Optional[str] = None
    ) -> None:
        super().__init__(message, stage=stage)
        self.violations = violations


class InconsistentSupportError(EquilibriumError):
    """Raised when a density computed on a support cannot be the equilibrium."""


class ArcCollapseError(EquilibriumError):
    """Raised when an arc or a gap shrinks to nothing; retry with fewer arcs."""

    def __init__(
        self, message: str, index: int, kind: str, *, stage: Optional[str] = None
    ) -> None:
        super().__init__(message, stage=stage)
        self.index = index
        self.kind = kind


class ConvergenceError(EquilibriumError):
    """Raised when an iteration budget is exhausted."""


class VerificationError(EquilibriumError):
    """Raised when U+Q varies too much on the support to read F_w."""

    def __init__(
        self, message: str, variation: float, *, stage: Optional[str] = None
    ) -> None:
        super().__init__(message, stage=stage)
        self.variation = variation


class ConfigError(EquilibriumError):
    """Raised for malformed or inconsistent configuration."""
