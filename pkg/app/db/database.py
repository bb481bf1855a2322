# app/db/database.py
"""
Reading query and database files from disk.
"""
from pathlib import Path

from app.models import Database, Query
from app.services.parser import parse_database, parse_query
from app.utils.errors import UsageError


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from e


def load_query(path: str | Path) -> Query:
    return parse_query(_read(path))


def load_database(path: str | Path, q: Query) -> Database:
    return parse_database(_read(path), q)
