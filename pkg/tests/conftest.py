import sys
from pathlib import Path

import duckdb
import pytest

ROOT = Path(__file__).resolve().parents[1] / "python"
sys.path.insert(0, str(ROOT))


@pytest.fixture
def con():
    conn = duckdb.connect()
    yield conn
    conn.close()
