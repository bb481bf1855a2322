# app/models/__init__.py
from .models import (
    Atom,
    Block,
    Constant,
    Database,
    Fact,
    Mode,
    Query,
    RelationDecl,
    Term,
    Valuation,
    Variable,
    apply_term,
    blocks,
    quote_constant,
    substitute,
)

__all__ = [
    "Atom",
    "Block",
    "Constant",
    "Database",
    "Fact",
    "Mode",
    "Query",
    "RelationDecl",
    "Term",
    "Valuation",
    "Variable",
    "apply_term",
    "blocks",
    "quote_constant",
    "substitute",
]
