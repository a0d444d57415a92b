from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Union

import duckdb
import numpy as np
from numpy.typing import NDArray

try:
    from typing import TypeAlias
except ImportError:  # pragma: no cover - Python < 3.10
    from typing_extensions import TypeAlias

FloatArray: TypeAlias = NDArray[np.float64]
ComplexArray: TypeAlias = NDArray[np.complex128]
Angles: TypeAlias = Union[float, FloatArray]
RealFunction: TypeAlias = Callable[[FloatArray], FloatArray]


@dataclass
class TableState:
    temp_tables: List[str]


class TableConn:
    """DuckDB connection that remembers the temp tables it created."""

    def __init__(
        self,
        connection: duckdb.DuckDBPyConnection,
        *,
        temp_tables: Optional[List[str]] = None,
    ) -> None:
        self.raw_connection = connection
        self.state = TableState(temp_tables if temp_tables is not None else [])

    def __getattr__(self, name: str) -> Any:
        return getattr(self.raw_connection, name)
