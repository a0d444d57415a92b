from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Union

import duckdb

from ._types import TableConn


def ident(name: str) -> str:
    escaped = name.replace('"', '""')
    return f'"{escaped}"'


def sql_literal(value: Any) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, str):
        escaped = value.replace("'", "''")
        return f"'{escaped}'"
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, float):
        # repr round-trips; the string cast keeps DuckDB from reading a DECIMAL
        if math.isnan(value):
            return "CAST('nan' AS DOUBLE)"
        if math.isinf(value):
            return "CAST('inf' AS DOUBLE)" if value > 0 else "CAST('-inf' AS DOUBLE)"
        return f"CAST('{value!r}' AS DOUBLE)"
    return str(value)


def run_sql(
    conn: Union[TableConn, duckdb.DuckDBPyConnection],
    sql: str,
) -> duckdb.DuckDBPyRelation:
    return conn.sql(sql)


def islands_sql(relation_sql: str, index: str, predicate: str) -> str:
    """Runs of consecutive `index` values whose rows satisfy `predicate`."""
    idx = ident(index)
    return f"""
    SELECT
      MIN({idx}) AS run_start,
      MAX({idx}) AS run_end
    FROM
      (
        SELECT
          {idx},
          {idx} - ROW_NUMBER() OVER (ORDER BY {idx}) AS run
        FROM
          ({relation_sql}) AS t
        WHERE
          {predicate}
      ) AS runs
    GROUP BY
      run
    ORDER BY
      run_start
    """


def copy_to_csv(
    conn: Union[TableConn, duckdb.DuckDBPyConnection],
    relation: duckdb.DuckDBPyRelation,
    path: Union[str, Path],
) -> None:
    sql = relation.sql_query()
    conn.execute(
        f"COPY ({sql}) TO {sql_literal(str(path))} (HEADER, DELIMITER ',')"
    )
