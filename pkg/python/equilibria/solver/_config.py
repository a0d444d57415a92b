from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from . import _validation as v
from ._arcs import ArcSet, parse_arcs
from ._exceptions import ConfigError
from ._field import ExternalField, field_from_json


# JSON numbers like 100.0 are accepted for these
INTEGER_OPTIONS = (
    "grid",
    "verify_grid",
    "quad_nodes",
    "samples_per_arc",
    "oracle_max_iter",
    "max_iter",
    "k",
)


@dataclass(frozen=True)
class Tolerances:
    """Pass thresholds for each residual of the verification report."""

    frostman_equality: float = 1e-4
    frostman_inequality: float = 1e-6
    mass: float = 1e-8
    density_square: float = 1e-5
    conjugate: float = 1e-5
    imag_part: float = 1e-8

    def __post_init__(self) -> None:
        for item in dataclasses.fields(self):
            v.validate_positive(getattr(self, item.name), f"tolerances.{item.name}")

    @classmethod
    def from_json(cls, document: Mapping[str, Any]) -> "Tolerances":
        if not isinstance(document, Mapping):
            raise ConfigError("`tolerances` must be a JSON object.", stage="config")
        names = [item.name for item in dataclasses.fields(cls)]
        v.reject_unknown_keys(document.keys(), names, "tolerances")
        return cls(**dict(document))

    def to_json(self) -> Dict[str, float]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SolverOptions:
    grid: int = 2048
    oracle_tol: float = 1e-5
    oracle_max_iter: int = 50_000
    endpoint_tol: float = 1e-8
    max_iter: int = 100
    quad_nodes: int = 256
    samples_per_arc: int = 64
    support_threshold: float = 1e-3
    verify_grid: int = 4096
    use_oracle: bool = True
    arcs: Optional[ArcSet] = None
    k: Optional[int] = None

    def __post_init__(self) -> None:
        v.validate_grid(self.grid)
        v.validate_grid(self.verify_grid, "verify_grid")
        v.validate_grid(self.quad_nodes, "quad_nodes", minimum=8)
        v.validate_grid(self.samples_per_arc, "samples_per_arc", minimum=8)
        v.validate_positive(self.oracle_tol, "oracle_tol")
        v.validate_positive(self.endpoint_tol, "endpoint_tol")
        v.validate_positive(self.support_threshold, "support_threshold")
        v.validate_count(self.oracle_max_iter, "oracle_max_iter")
        v.validate_count(self.max_iter, "max_iter")
        v.validate_optional_count(self.k, "k")
        if not isinstance(self.use_oracle, bool):
            raise ConfigError("`use_oracle` must be true or false.", stage="config")
        if self.arcs is not None and self.arcs.is_full:
            raise ConfigError("`arcs` must list proper arcs.", stage="config")

    def replace(self, **changes: Any) -> "SolverOptions":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_json(cls, document: Mapping[str, Any]) -> "SolverOptions":
        if not isinstance(document, Mapping):
            raise ConfigError("`solver` must be a JSON object.", stage="config")
        names = [item.name for item in dataclasses.fields(cls)]
        v.reject_unknown_keys(document.keys(), names, "solver")
        values = dict(document)
        arcs = values.get("arcs")
        if arcs is not None:
            values["arcs"] = _parse_arcs_value(arcs)
        for name in INTEGER_OPTIONS:
            if isinstance(values.get(name), float):
                values[name] = _integral(values[name], name)
        return cls(**values)

    def to_json(self) -> Dict[str, Any]:
        document = dataclasses.asdict(self)
        document["arcs"] = None if self.arcs is None else self.arcs.to_json()
        return document


def _integral(value: float, label: str) -> int:
    if not value.is_integer():
        raise ConfigError(f"`{label}` must be an integer.", stage="config")
    return int(value)


def _parse_arcs_value(value: Any) -> ArcSet:
    try:
        if isinstance(value, str):
            return parse_arcs(value)
        return ArcSet.from_pairs(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"`arcs` is malformed: {exc}", stage="config") from exc


@dataclass(frozen=True)
class ProblemConfig:
    """A field plus solver options, tolerances and output formats."""

    field: ExternalField
    solver: SolverOptions = dataclasses.field(default_factory=SolverOptions)
    tolerances: Tolerances = dataclasses.field(default_factory=Tolerances)
    formats: Tuple[str, ...] = v.FORMATS

    @classmethod
    def from_json(cls, document: Any) -> "ProblemConfig":
        if not isinstance(document, Mapping):
            raise ConfigError("Config must be a JSON object.", stage="config")
        v.reject_unknown_keys(
            document.keys(), ["field", "solver", "tolerances", "output"], "config"
        )
        if "field" not in document:
            raise ConfigError("Config needs a `field` entry.", stage="config")
        try:
            field = field_from_json(document["field"])
        except ValueError as exc:
            raise ConfigError(f"`field` is invalid: {exc}", stage="config") from exc
        output = document.get("output", {})
        if not isinstance(output, Mapping):
            raise ConfigError("`output` must be a JSON object.", stage="config")
        v.reject_unknown_keys(output.keys(), ["formats"], "output")
        try:
            solver = SolverOptions.from_json(document.get("solver", {}))
            tolerances = Tolerances.from_json(document.get("tolerances", {}))
        except TypeError as exc:
            raise ConfigError(
                f"Config entry has the wrong type: {exc}", stage="config"
            ) from exc
        formats = v.validate_formats(output.get("formats", list(v.FORMATS)))
        return cls(field, solver, tolerances, formats)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ProblemConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(
                f"Cannot read config `{path}`: {exc}", stage="config"
            ) from exc
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"Config `{path}` is not valid JSON: {exc}", stage="config"
            ) from exc
        return cls.from_json(document)

    def with_overrides(
        self,
        *,
        grid: Optional[int] = None,
        tol: Optional[float] = None,
        arcs: Optional[str] = None,
    ) -> "ProblemConfig":
        """Apply command-line overrides on top of the file values."""
        changes: Dict[str, Any] = {}
        if grid is not None:
            changes["grid"] = grid
        if tol is not None:
            changes["endpoint_tol"] = tol
        if arcs is not None:
            changes["arcs"] = _parse_arcs_value(arcs)
        if not changes:
            return self
        return dataclasses.replace(self, solver=self.solver.replace(**changes))

    def to_json(self) -> Dict[str, Any]:
        return {
            "field": self.field.to_json(),
            "solver": self.solver.to_json(),
            "tolerances": self.tolerances.to_json(),
            "output": {"formats": list(self.formats)},
        }
