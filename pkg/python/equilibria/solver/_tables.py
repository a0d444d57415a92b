from __future__ import annotations

import uuid
from typing import Any, List, Optional, Sequence, Tuple, Union

import duckdb
import numpy as np

from . import _sql as q
from ._exceptions import ConfigError
from ._types import TableConn

Schema = Sequence[Tuple[str, str]]


def resolve_connection(
    connection: Optional[Union[duckdb.DuckDBPyConnection, TableConn]],
) -> TableConn:
    if isinstance(connection, TableConn):
        return connection
    if connection is not None:
        conn_candidate = connection
    else:
        default_conn = duckdb.default_connection
        conn_candidate = default_conn() if callable(default_conn) else default_conn
    if not isinstance(conn_candidate, duckdb.DuckDBPyConnection):
        raise ConfigError("`con` must be a DuckDB connection.")
    return TableConn(conn_candidate)


def rows_relation_sql(rows: Sequence[Sequence[Any]], schema: Schema) -> str:
    if not rows:
        select_list = ", ".join(
            f"CAST(NULL AS {dtype}) AS {q.ident(name)}" for name, dtype in schema
        )
        return f"SELECT {select_list} LIMIT 0"
    value_rows = [
        "(" + ", ".join(q.sql_literal(value) for value in row) + ")" for row in rows
    ]
    alias_cols = ", ".join(f"col{i}" for i in range(len(schema)))
    select_list = ", ".join(
        f"CAST(col{i} AS {dtype}) AS {q.ident(name)}"
        for i, (name, dtype) in enumerate(schema)
    )
    return (
        f"SELECT {select_list} FROM (VALUES {', '.join(value_rows)}) AS v({alias_cols})"
    )


def columns_relation_sql(columns: Sequence[Any], schema: Schema) -> str:
    """Typed VALUES SQL for equal-length numpy columns."""
    if len(columns) != len(schema):
        raise ConfigError("Column count does not match the schema")
    lists = [np.asarray(column).tolist() for column in columns]
    rows = [tuple(_python_scalar(value) for value in row) for row in zip(*lists)]
    return rows_relation_sql(rows, schema)


def _python_scalar(value: Any) -> Any:
    if value is None or isinstance(value, (bool, int, str)):
        return value
    return float(value)


def materialize_temp_table(conn: TableConn, sql: str) -> str:
    name = f"__equilibria_table_{uuid.uuid4().hex}"
    conn.execute(f"CREATE OR REPLACE TEMP TABLE {q.ident(name)} AS {sql}")
    conn.state.temp_tables.append(name)
    return name


def finalize_relation(
    conn: TableConn,
    sql: str,
    materialize: bool,
) -> duckdb.DuckDBPyRelation:
    if not materialize:
        return conn.sql(sql)
    table = materialize_temp_table(conn, sql)
    return conn.sql(f"SELECT * FROM {q.ident(table)}")


def build_rows_relation(
    conn: TableConn,
    rows: Sequence[Sequence[Any]],
    schema: Schema,
    materialize: bool,
) -> duckdb.DuckDBPyRelation:
    sql = rows_relation_sql(rows, schema)
    return finalize_relation(conn, sql, materialize)


def build_columns_relation(
    conn: TableConn,
    columns: Sequence[Any],
    schema: Schema,
    materialize: bool,
) -> duckdb.DuckDBPyRelation:
    sql = columns_relation_sql(columns, schema)
    return finalize_relation(conn, sql, materialize)


def index_runs(conn: TableConn, mask: Any) -> List[Tuple[int, int]]:
    """Inclusive (first, last) index runs where `mask` holds, in index order."""
    keep = np.asarray(mask, dtype=bool)
    indices = np.arange(keep.size)
    relation_sql = columns_relation_sql(
        [indices, keep], [("i", "BIGINT"), ("keep", "BOOLEAN")]
    )
    rows = q.run_sql(conn, q.islands_sql(relation_sql, "i", "keep")).fetchall()
    return [(int(first), int(last)) for first, last in rows]


def drop_temp_tables(conn: TableConn) -> None:
    for table in reversed(conn.state.temp_tables):
        try:
            conn.execute(f"DROP TABLE IF EXISTS {q.ident(table)}")
        except duckdb.Error:
            pass
    conn.state.temp_tables.clear()


def circular_runs(conn: TableConn, mask: Any) -> List[Tuple[int, int]]:
    """Runs of a periodic mask; a run crossing the last index ends past n - 1."""
    keep = np.asarray(mask, dtype=bool)
    runs = index_runs(conn, keep)
    n = keep.size
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == n - 1:
        first = runs.pop(0)
        last = runs.pop()
        runs.append((last[0], first[1] + n))
    return runs
