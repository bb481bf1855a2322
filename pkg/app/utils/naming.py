# app/utils/naming.py
"""
Fresh names for relations, variables and constants.

Relation and variable names are chosen deterministically from what a query
already uses, so query-level rewrites stay pure. Constants minted while
rewriting a database (surrogate keys, component identifiers) come from a
per-run monotone counter, which keeps them injective across recursion levels.
"""
import itertools
from collections.abc import Iterable

from app.models import Constant


def fresh_name(base: str, taken: Iterable[str]) -> str:
    used = set(taken)
    if base not in used:
        return base
    for n in itertools.count(1):
        candidate = f"{base}_{n}"
        if candidate not in used:
            return candidate
    raise AssertionError("unreachable")


class Mint:
    """Per-run source of fresh constants."""

    def __init__(self) -> None:
        self._counter = itertools.count(1)

    def constant(self, prefix: str, tag: str) -> Constant:
        serial = next(self._counter)
        return Constant(f"{prefix}{serial}", tag=tag, serial=serial)
